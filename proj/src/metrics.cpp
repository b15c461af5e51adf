#include "ermatch/metrics.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace ermatch {

MetricsReport score_predictions(const IdPairSet& predicted, const GroundTruth& truth,
                                const IdPairSet& universe) {
  MetricsReport r;
  for (const auto& p : predicted)
    truth.matches.count(p) ? ++r.tp : ++r.fp;
  for (const auto& t : truth.matches)
    if (!predicted.count(t)) ++r.fn;
  for (const auto& u : universe)
    if (!predicted.count(u) && !truth.matches.count(u)) ++r.tn;

  r.precision_defined = (r.tp + r.fp) > 0;
  r.recall_defined = (r.tp + r.fn) > 0;
  r.precision = r.precision_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.recall_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1_defined = (r.precision + r.recall) > 0.0;
  r.f1 = r.f1_defined ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

LabelQualityReport score_labels(const IdPairSet& positives, const IdPairSet& negatives,
                                const GroundTruth& truth) {
  LabelQualityReport r;
  for (const auto& p : positives)
    truth.matches.count(p) ? ++r.tp : ++r.fn;
  for (const auto& n : negatives)
    truth.matches.count(n) ? ++r.fp : ++r.tn;
  r.tpr_defined = (r.tp + r.fn) > 0;
  r.tnr_defined = (r.tn + r.fp) > 0;
  r.tpr = r.tpr_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.tnr = r.tnr_defined ? static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp) : 0.0;
  return r;
}

CandidateSplit split_candidates(const CandidateSet& candidates, std::uint64_t seed) {
  const std::size_t n = candidates.pairs.size();
  if (n < 5) throw std::invalid_argument("split_candidates: need at least 5 candidate pairs");

  std::vector<std::pair<int, int>> shuffled = candidates.pairs;
  // explicit Fisher-Yates so the partition is stable across standard libraries
  std::mt19937_64 gen(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
    std::swap(shuffled[i], shuffled[j]);
  }

  const std::size_t fifth = n / 5;
  CandidateSplit s;
  s.train.assign(shuffled.begin(), shuffled.end() - 2 * fifth);
  s.validation.assign(shuffled.end() - 2 * fifth, shuffled.end() - fifth);
  s.test.assign(shuffled.end() - fifth, shuffled.end());
  return s;
}

} // namespace ermatch
