#include "ermatch/relgraph.hpp"

#include <set>
#include <unordered_map>

#include "ermatch/text.hpp"

namespace ermatch {

MultiRelGraph build_graph(const Dataset& d) {
  MultiRelGraph g;
  g.tuple_count = static_cast<int>(d.size());
  g.relations = d.attributes;
  g.tuple_ids.reserve(d.size());
  std::unordered_map<std::string, int> value_index;
  for (const auto& t : d.tuples) {
    g.tuple_ids.push_back(t.id);
    const int tuple_node = static_cast<int>(g.tuple_ids.size()) - 1;
    for (std::size_t a = 0; a < t.values.size(); ++a) {
      if (!t.values[a]) continue;
      const std::string key = normalize_value(*t.values[a]);
      if (key.empty()) continue;
      auto [it, inserted] = value_index.try_emplace(key, static_cast<int>(g.value_texts.size()));
      if (inserted) g.value_texts.push_back(key);
      g.edges.push_back({tuple_node, static_cast<int>(a), it->second});
    }
  }
  return g;
}

GraphStats graph_stats(const MultiRelGraph& g) {
  GraphStats s;
  s.nodes = g.node_count();
  s.edges = static_cast<long long>(g.edges.size());
  s.relations = static_cast<long long>(g.relations.size());
  return s;
}

GraphStats reference_graph(const Dataset& d, ReferenceStyle) {
  // Both reference constructions share the tripartite count model:
  // tuple-, attribute-, and value-level nodes; every non-missing cell
  // contributes a tuple-value edge and an attribute-value edge.
  std::set<std::string> values;
  long long cells = 0;
  for (const auto& t : d.tuples) {
    for (std::size_t a = 0; a < t.values.size(); ++a) {
      if (!t.values[a]) continue;
      const std::string key = normalize_value(*t.values[a]);
      if (key.empty()) continue;
      ++cells;
      values.insert(key);
    }
  }
  GraphStats s;
  s.nodes = static_cast<long long>(d.size()) + static_cast<long long>(d.attributes.size()) +
            static_cast<long long>(values.size());
  s.edges = 2 * cells;
  s.relations = static_cast<long long>(d.attributes.size());
  return s;
}

} // namespace ermatch
