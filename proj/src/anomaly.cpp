#include "ermatch/anomaly.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "ermatch/text.hpp"

namespace ermatch {

AttributeMapping auto_mapping(const Dataset& left, const Dataset& right) {
  AttributeMapping m;
  std::unordered_map<std::string, std::string> right_by_lower;
  for (const auto& a : right.attributes) right_by_lower.emplace(ascii_lower(a), a);
  for (const auto& a : left.attributes) {
    const auto it = right_by_lower.find(ascii_lower(a));
    if (it != right_by_lower.end()) m.pairs.emplace_back(a, it->second);
  }
  return m;
}

double token_jaccard(const std::string& a, const std::string& b) {
  const auto ta = split_tokens(normalize_value(a));
  const auto tb = split_tokens(normalize_value(b));
  const std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<AnomalyRecord> detect_anomalies(const Dataset& left, const Dataset& right,
                                            const std::vector<std::pair<std::string, std::string>>& matches,
                                            const AttributeMapping& mapping,
                                            double jaccard_threshold) {
  struct Mapped {
    std::size_t left_idx, right_idx;
    std::string left_name, right_name;
  };
  std::vector<Mapped> cols;
  std::set<std::string> used_left, used_right;
  for (const auto& [la, ra] : mapping.pairs) {
    const auto li = left.attribute_index(la);
    const auto ri = right.attribute_index(ra);
    if (!li) throw std::runtime_error("attribute mapping: unknown left attribute \"" + la + "\"");
    if (!ri) throw std::runtime_error("attribute mapping: unknown right attribute \"" + ra + "\"");
    if (!used_left.insert(la).second)
      throw std::runtime_error("attribute mapping: left attribute \"" + la + "\" mapped twice");
    if (!used_right.insert(ra).second)
      throw std::runtime_error("attribute mapping: right attribute \"" + ra + "\" mapped twice");
    cols.push_back({*li, *ri, la, ra});
  }

  std::unordered_map<std::string, const Tuple*> left_by_id, right_by_id;
  for (const auto& t : left.tuples) left_by_id.emplace(t.id, &t);
  for (const auto& t : right.tuples) right_by_id.emplace(t.id, &t);

  std::vector<AnomalyRecord> out;
  for (const auto& [lid, rid] : matches) {
    const auto lt = left_by_id.find(lid);
    const auto rt = right_by_id.find(rid);
    if (lt == left_by_id.end() || rt == right_by_id.end())
      throw std::runtime_error("detect_anomalies: matched pair references unknown tuple id");
    for (const auto& c : cols) {
      const auto& lv = lt->second->values[c.left_idx];
      const auto& rv = rt->second->values[c.right_idx];
      if (!lv && !rv) continue;
      if (lv && rv) {
        if (normalize_value(*lv) == normalize_value(*rv)) continue;
        if (token_jaccard(*lv, *rv) < jaccard_threshold)
          out.push_back({lid, rid, c.left_name, c.right_name, *lv, *rv, AnomalyKind::contradiction});
      } else {
        out.push_back({lid, rid, c.left_name, c.right_name, lv ? *lv : std::string{},
                       rv ? *rv : std::string{}, AnomalyKind::one_side_missing});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const AnomalyRecord& a, const AnomalyRecord& b) {
    return std::tie(a.left_id, a.left_attribute, a.right_id) <
           std::tie(b.left_id, b.left_attribute, b.right_id);
  });
  return out;
}

} // namespace ermatch
