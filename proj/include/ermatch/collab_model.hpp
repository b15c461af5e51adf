#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ermatch/blocking.hpp"
#include "ermatch/labels.hpp"

namespace ermatch {

struct CollabConfig {
  double lambda = 0.5; // cosine-loss margin for mismatched pairs
  double mu = 0.2;     // weight of the cosine-embedding term
  int epochs = 250;
  double learning_rate = 0.1;
  double decision_threshold = 0.5;
  std::uint64_t seed = 1;
  bool use_graph_features = true; // false zeroes the graph blocks (ablation)
};

/// Trainable pieces: a projection applied to sentence embeddings (the
/// trainable stand-in for encoder fine-tuning) and the pair classifier
/// over [ |p_i - p_j| ; p_i*p_j ; |h_i - h_j| ; h_i*h_j ].
struct CollabParams {
  Eigen::MatrixXd projection; // n x n
  Eigen::MatrixXd classifier; // (2n + 2c) x 2, maps features to logits
};

CollabParams init_collab_params(int sentence_dim, int graph_dim, std::uint64_t seed);

/// Feature vector for one pair from raw sentence embeddings (projected
/// internally) and fixed graph embeddings. Dimension 2n + 2c.
Eigen::VectorXd pair_features(const CollabParams& params, const Eigen::VectorXd& sent_left,
                              const Eigen::VectorXd& sent_right, const Eigen::VectorXd& graph_left,
                              const Eigen::VectorXd& graph_right, bool use_graph_features = true);

/// Softmax cross-entropy of a 2-class logit vector, max-subtraction stabilized.
double cross_entropy_loss(const Eigen::Vector2d& logits, int label);

/// 1 - cos for matched pairs; max(0, cos - lambda) for mismatched ones.
/// Zero vectors count as cosine 0.
double cosine_embedding_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int label,
                             double lambda);

struct CollabTrainResult {
  CollabParams params;
  std::vector<double> loss_trace; // epochs + 1 entries; first is the initial loss
};

/// Full-batch gradient descent on projection and classifier, minimizing
/// sum over labeled pairs of cross-entropy + mu * cosine-embedding loss.
/// Sentence/graph matrices hold one row per tuple. Throws when the label
/// sets are empty or the loss turns non-finite.
CollabTrainResult train_collab(const Eigen::MatrixXd& sent_left, const Eigen::MatrixXd& sent_right,
                               const Eigen::MatrixXd& graph_left, const Eigen::MatrixXd& graph_right,
                               const PositiveLabels& positives, const NegativeLabels& negatives,
                               const CollabConfig& cfg);

struct Prediction {
  int left;
  int right;
  double probability; // softmax mass on the match class
  int label;          // 1 iff probability > threshold (strict)
};

std::vector<Prediction> predict(const CollabParams& params, const CandidateSet& candidates,
                                const Eigen::MatrixXd& sent_left, const Eigen::MatrixXd& sent_right,
                                const Eigen::MatrixXd& graph_left, const Eigen::MatrixXd& graph_right,
                                const CollabConfig& cfg);

/// Analytic gradient of the combined loss w.r.t. projection and classifier
/// versus central finite differences on a small random instance. Returns the
/// max relative error.
double gradient_check_collab(std::uint64_t seed = 7);

} // namespace ermatch
