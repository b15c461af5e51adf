#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ermatch/dataset.hpp"

namespace ermatch {

/// Aligned attribute pairs across the two schemas. Each side appears at most
/// once.
struct AttributeMapping {
  std::vector<std::pair<std::string, std::string>> pairs;
};

/// Attributes whose lowercased names coincide, in left-schema order.
AttributeMapping auto_mapping(const Dataset& left, const Dataset& right);

enum class AnomalyKind { contradiction, one_side_missing };

struct AnomalyRecord {
  std::string left_id, right_id;
  std::string left_attribute, right_attribute;
  std::string left_value, right_value; // empty when missing
  AnomalyKind kind;
};

/// Token-set Jaccard over lowercased whitespace tokens; 1 when both empty.
double token_jaccard(const std::string& a, const std::string& b);

/// For every matched pair and mapped attribute pair: both values present and
/// Jaccard below the threshold -> contradiction; exactly one present ->
/// one-side-missing. Values equal after normalization never produce a record.
/// Output sorted by (left_id, left_attribute, right_id). Throws when the
/// mapping names an unknown attribute.
std::vector<AnomalyRecord> detect_anomalies(const Dataset& left, const Dataset& right,
                                            const std::vector<std::pair<std::string, std::string>>& matches,
                                            const AttributeMapping& mapping,
                                            double jaccard_threshold = 0.9);

} // namespace ermatch
