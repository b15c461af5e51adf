#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace ermatch {

/// Candidate tuple pairs surviving blocking, as (row, col) indices into the
/// similarity matrix. Sorted ascending, no duplicates.
struct CandidateSet {
  std::vector<std::pair<int, int>> pairs;
  int k = 0;
};

/// Bidirectional top-k over the similarity matrix: (i,j) is kept when j is
/// among the k most similar columns of row i or i is among the k most
/// similar rows of column j. Ties break toward the smaller index.
CandidateSet block_topk(const Eigen::MatrixXd& scores, int k);

} // namespace ermatch
