#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ermatch/dataset.hpp"

namespace ermatch {

struct SyntheticSpec {
  int left_size = 200;
  int right_size = 200;
  int match_count = 100;
  double typo_rate = 0.0;   // per-character edit probability in matched cells
  double delete_rate = 0.0; // per-cell deletion probability in matched rows
  double swap_rate = 0.0;   // per-row probability of swapping two cell values
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Dataset left, right;
  std::vector<std::pair<std::string, std::string>> truth; // matched id pairs
};

/// Product-style fixture: generates `left`, carries `match_count` rows into
/// `right` with the configured perturbations (remaining right rows are
/// fresh), shuffles the right side, and reports the matched id pairs.
/// Left rows are unique. Deterministic under seed. Throws when match_count
/// exceeds either size.
SyntheticData make_synthetic(const SyntheticSpec& spec);

} // namespace ermatch
