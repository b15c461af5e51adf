#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ermatch {

struct PositiveLabelConfig {
  double theta = 0.03; // top-1 vs top-2 similarity margin, both directions
};

struct NegativeLabelConfig {
  int epsilon = 10; // neighbors taken per replacement side
  int skip_top = 2; // nearest neighbors dismissed first (rank 1 is self)
};

struct ScoredPair {
  int left;
  int right;
  double score;
};

/// Mutual-best pairs passing the dual margin test. At most one pair per row
/// and per column by construction.
struct PositiveLabels {
  std::vector<ScoredPair> pairs;
};

struct NegativePair {
  int left;
  int right;
  int source; // index into the positive list this pair was derived from
};

/// Near-neighbor replacements of positive pairs; disjoint from the positives.
struct NegativeLabels {
  std::vector<NegativePair> pairs;
};

/// (i,j) is accepted when i and j are mutually most similar and both
/// directions clear the top-1/top-2 margin theta. A missing second-best
/// (single row or column) counts as similarity 0. Ties break toward the
/// smaller index.
PositiveLabels generate_positives(const Eigen::MatrixXd& scores, const PositiveLabelConfig& cfg);

/// For each positive (i,i'): replace i by its epsilon nearest neighbors
/// within the left dataset and i' by its epsilon nearest within the right,
/// skipping the skip_top nearest (rank 1 is the tuple itself). `within_left`
/// and `within_right` are the within-dataset cosine matrices. Pairs that
/// collide with a positive are dropped; duplicates keep their first source.
NegativeLabels generate_negatives(const Eigen::MatrixXd& within_left,
                                  const Eigen::MatrixXd& within_right,
                                  const PositiveLabels& positives,
                                  const NegativeLabelConfig& cfg);

} // namespace ermatch
