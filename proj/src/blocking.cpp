#include "ermatch/blocking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ermatch {

namespace {

/// Indices of the k largest entries, score descending then index ascending.
std::vector<int> topk_indices(const Eigen::VectorXd& v, int k) {
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto better = [&](int a, int b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  };
  const int take = std::min<int>(k, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), better);
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

} // namespace

CandidateSet block_topk(const Eigen::MatrixXd& scores, int k) {
  if (k < 1) throw std::invalid_argument("block_topk: k must be >= 1");
  CandidateSet cs;
  cs.k = k;
  cs.pairs.reserve(static_cast<std::size_t>(scores.rows() + scores.cols()) * static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (const int j : topk_indices(scores.row(i).transpose(), k))
      cs.pairs.emplace_back(static_cast<int>(i), j);
  for (Eigen::Index j = 0; j < scores.cols(); ++j)
    for (const int i : topk_indices(scores.col(j), k))
      cs.pairs.emplace_back(i, static_cast<int>(j));
  std::sort(cs.pairs.begin(), cs.pairs.end());
  cs.pairs.erase(std::unique(cs.pairs.begin(), cs.pairs.end()), cs.pairs.end());
  return cs;
}

} // namespace ermatch
