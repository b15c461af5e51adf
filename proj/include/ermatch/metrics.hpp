#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ermatch/blocking.hpp"

namespace ermatch {

using IdPair = std::pair<std::string, std::string>;
using IdPairSet = std::set<IdPair>;

struct GroundTruth {
  IdPairSet matches;
};

/// Precision/recall/F1 with zero denominators reported as 0 and flagged.
struct MetricsReport {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool precision_defined = false, recall_defined = false, f1_defined = false;
};

/// tp = |pred ∩ truth|, fp = |pred \ truth|, fn = |truth \ pred|;
/// tn counts universe pairs in neither set.
MetricsReport score_predictions(const IdPairSet& predicted, const GroundTruth& truth,
                                const IdPairSet& universe);

/// Label-quality counts: generated positives split into tp (in truth) and fn
/// (not in truth), tpr = tp/(tp+fn); generated negatives into tn (not in
/// truth) and fp (in truth), tnr = tn/(tn+fp).
struct LabelQualityReport {
  long long tp = 0, fn = 0, tn = 0, fp = 0;
  double tpr = 0.0, tnr = 0.0;
  bool tpr_defined = false, tnr_defined = false;
};

LabelQualityReport score_labels(const IdPairSet& positives, const IdPairSet& negatives,
                                const GroundTruth& truth);

struct CandidateSplit {
  std::vector<std::pair<int, int>> train, validation, test;
};

/// Disjoint 3:1:1 partition by seeded shuffle; validation and test each get
/// floor(n/5) pairs, the remainder goes to train. Throws when n < 5.
CandidateSplit split_candidates(const CandidateSet& candidates, std::uint64_t seed);

} // namespace ermatch
