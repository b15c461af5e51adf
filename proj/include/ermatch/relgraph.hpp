#pragma once

#include <string>
#include <vector>

#include "ermatch/dataset.hpp"

namespace ermatch {

/// Multi-relational graph over a dataset: one node per tuple, one node per
/// distinct normalized non-missing value, one attribute-typed edge per
/// non-missing cell. Tuple nodes occupy ids [0, tuple_count); value node v
/// has id tuple_count + v.
struct MultiRelGraph {
  int tuple_count = 0;
  std::vector<std::string> tuple_ids;
  std::vector<std::string> value_texts; // normalized, insertion order
  std::vector<std::string> relations;   // attribute names
  struct Edge {
    int tuple;    // tuple node index
    int relation; // index into relations
    int value;    // value node index (local; global id = tuple_count + value)
  };
  std::vector<Edge> edges;

  int node_count() const { return tuple_count + static_cast<int>(value_texts.size()); }
};

struct GraphStats {
  long long nodes = 0;
  long long edges = 0;
  long long relations = 0;
};

/// Tuple-level and value-level nodes joined by attribute-typed edges.
/// Equal normalized values share one node, across attributes too.
MultiRelGraph build_graph(const Dataset& d);

GraphStats graph_stats(const MultiRelGraph& g);

/// Count model for the tripartite constructions (tuple, attribute, and value
/// nodes) used by earlier graph-based matchers: nodes = |T| + m + distinct
/// values; edges = non-missing cells + distinct (attribute, value) pairs.
enum class ReferenceStyle { embdi, grapher };
GraphStats reference_graph(const Dataset& d, ReferenceStyle style);

} // namespace ermatch
