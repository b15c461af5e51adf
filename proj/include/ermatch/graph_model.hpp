#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ermatch/embedding.hpp"
#include "ermatch/labels.hpp"
#include "ermatch/relgraph.hpp"

namespace ermatch {

struct GraphTrainConfig {
  int dim = 128;    // c, graph feature dimension
  int layers = 2;   // message-passing depth
  double gamma = 1.0;
  int epochs = 50;
  double learning_rate = 0.05;
  int negatives_per_positive = 20;
  std::uint64_t seed = 1;
};

/// Message-passing parameters shared by both datasets' graphs. Relation
/// vectors are keyed by attribute name so graphs with matching schemas
/// share them.
struct GnnParams {
  std::vector<std::string> relation_names;
  Eigen::MatrixXd relation_vectors;        // |relations| x c, zero-initialized
  std::vector<Eigen::MatrixXd> transforms; // one c x c matrix per layer
  int dim() const { return transforms.empty() ? 0 : static_cast<int>(transforms[0].rows()); }
  int layers() const { return static_cast<int>(transforms.size()); }
};

GnnParams init_gnn_params(const std::vector<std::string>& relation_names, int dim, int layers,
                          std::uint64_t seed);

/// Map a graph's local relation indices into params.relation_names.
std::vector<int> map_relations(const MultiRelGraph& g, const GnnParams& params);

/// Initial node matrix (tuple rows first, then value rows): value nodes embed
/// their text; tuple nodes take the mean of their value neighbors (zero when
/// isolated); nonzero rows are L2-normalized. Provider dimension must be c.
Eigen::MatrixXd init_node_embeddings(const MultiRelGraph& g, const EmbeddingProvider& provider);

/// One pass over all layers. Per layer: each node averages W*(h_neighbor + r_a)
/// over its incident edges (both directions), adds the residual, renormalizes.
Eigen::MatrixXd gnn_forward(const MultiRelGraph& g, const std::vector<int>& relation_map,
                            const GnnParams& params, const Eigen::MatrixXd& h0);
Eigen::MatrixXd gnn_forward(const MultiRelGraph& g, const GnnParams& params,
                            const Eigen::MatrixXd& h0);

/// Hinge margin loss over cosine distances: for each positive pair and each
/// of its (capped) negatives, max(0, d_pos + gamma - d_neg). `left`/`right`
/// hold tuple-row embeddings for the two datasets. Throws on out-of-range
/// label indices.
double margin_loss(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                   const PositiveLabels& positives, const NegativeLabels& negatives,
                   const GraphTrainConfig& cfg);

struct GraphTrainResult {
  GnnParams params;
  Eigen::MatrixXd left_embeddings;  // |T| x c, final-layer tuple rows
  Eigen::MatrixXd right_embeddings; // |T'| x c
  std::vector<double> loss_trace;   // epochs + 1 entries; first is the initial loss
};

/// Full-batch gradient descent on the transforms and relation vectors; node
/// inputs stay fixed. Throws on NaN loss. With zero epochs the initial node
/// embeddings are returned untouched.
GraphTrainResult train_graph(const MultiRelGraph& left_graph, const MultiRelGraph& right_graph,
                             const Eigen::MatrixXd& left_h0, const Eigen::MatrixXd& right_h0,
                             const PositiveLabels& positives, const NegativeLabels& negatives,
                             const GraphTrainConfig& cfg);

/// Analytic gradients of the margin loss (through the full forward pass)
/// versus central finite differences on a small built-in graph pair.
/// Returns the max relative error over every parameter entry.
double gradient_check_graph(std::uint64_t seed = 7);

} // namespace ermatch
