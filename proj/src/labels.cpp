#include "ermatch/labels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ermatch {

namespace {

struct BestTwo {
  double best_score = -std::numeric_limits<double>::infinity();
  int best_index = -1;
  double second_score = -std::numeric_limits<double>::infinity();
};

/// First and second entries under (score desc, index asc). Scanning in
/// ascending index order resolves ties toward the smaller index.
template <typename Vec>
BestTwo best_two(const Vec& v) {
  BestTwo bt;
  for (int j = 0; j < static_cast<int>(v.size()); ++j) {
    const double s = v[j];
    if (s > bt.best_score) {
      bt.second_score = bt.best_score;
      bt.best_score = s;
      bt.best_index = j;
    } else if (s > bt.second_score) {
      bt.second_score = s;
    }
  }
  if (v.size() < 2) bt.second_score = 0.0; // missing runner-up counts as similarity 0
  return bt;
}

/// Neighbor indices ranked by (similarity desc, index asc), positions
/// [skip, skip+take).
std::vector<int> ranked_neighbors(const Eigen::VectorXd& sims, int skip, int take) {
  std::vector<int> idx(static_cast<std::size_t>(sims.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto better = [&](int a, int b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  const int upto = std::min<int>(skip + take, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + upto, idx.end(), better);
  if (skip >= upto) return {};
  return {idx.begin() + skip, idx.begin() + upto};
}

} // namespace

PositiveLabels generate_positives(const Eigen::MatrixXd& scores, const PositiveLabelConfig& cfg) {
  if (cfg.theta < 0.0) throw std::invalid_argument("generate_positives: theta must be >= 0");
  PositiveLabels out;
  const Eigen::Index rows = scores.rows(), cols = scores.cols();
  if (rows == 0 || cols == 0) return out;

  std::vector<BestTwo> col_best(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) col_best[static_cast<std::size_t>(j)] = best_two(scores.col(j));

  for (Eigen::Index i = 0; i < rows; ++i) {
    const BestTwo row = best_two(scores.row(i));
    const int j = row.best_index;
    if (j < 0) continue;
    const BestTwo& col = col_best[static_cast<std::size_t>(j)];
    if (col.best_index != static_cast<int>(i)) continue; // not mutual
    const double delta1 = row.best_score - row.second_score;
    const double delta2 = col.best_score - col.second_score;
    if (delta1 >= cfg.theta && delta2 >= cfg.theta)
      out.pairs.push_back({static_cast<int>(i), j, row.best_score});
  }
  return out;
}

NegativeLabels generate_negatives(const Eigen::MatrixXd& within_left,
                                  const Eigen::MatrixXd& within_right,
                                  const PositiveLabels& positives,
                                  const NegativeLabelConfig& cfg) {
  if (cfg.epsilon < 1) throw std::invalid_argument("generate_negatives: epsilon must be >= 1");
  if (cfg.skip_top < 0) throw std::invalid_argument("generate_negatives: skip_top must be >= 0");

  std::set<std::pair<int, int>> positive_set, emitted;
  for (const auto& p : positives.pairs) positive_set.emplace(p.left, p.right);

  NegativeLabels out;
  const auto emit = [&](int l, int r, int source) {
    if (positive_set.count({l, r})) return;
    if (!emitted.insert({l, r}).second) return;
    out.pairs.push_back({l, r, source});
  };

  for (std::size_t p = 0; p < positives.pairs.size(); ++p) {
    const auto& pos = positives.pairs[p];
    if (pos.left >= within_left.rows() || pos.right >= within_right.rows())
      throw std::out_of_range("generate_negatives: positive pair index out of range");
    for (const int x : ranked_neighbors(within_left.row(pos.left).transpose(), cfg.skip_top, cfg.epsilon))
      emit(x, pos.right, static_cast<int>(p));
    for (const int y : ranked_neighbors(within_right.row(pos.right).transpose(), cfg.skip_top, cfg.epsilon))
      emit(pos.left, y, static_cast<int>(p));
  }
  return out;
}

} // namespace ermatch
