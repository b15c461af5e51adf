#include "ermatch/collab_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ermatch/embedding.hpp"

namespace ermatch {

namespace {

constexpr double kNormTol = 1e-12;

/// Feature columns are rescaled to this RMS at training start. Positive
/// pairs have near-zero interaction features on unit-norm embeddings, so
/// untreated columns leave plain gradient descent ill-conditioned; the
/// scales are folded into the exported classifier, which keeps the
/// logits = classifier^T features contract on raw features intact.
constexpr double kTargetColumnRms = 0.25;

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Fixed per-pair training inputs: raw sentence rows and precomputed graph
/// feature blocks (graph embeddings do not train here).
struct Batch {
  Eigen::MatrixXd sent_left, sent_right; // B x n
  Eigen::MatrixXd graph_abs, graph_dot;  // B x c
  std::vector<int> labels;               // 1 = match
  Eigen::VectorXd col_scale;             // feature-column rescale, size 2n+2c
  Eigen::Index size() const { return sent_left.rows(); }
};

struct LossGrads {
  double loss = 0.0;
  Eigen::MatrixXd d_projection, d_classifier;
};

LossGrads loss_and_grads(const CollabParams& params, const Batch& batch, const CollabConfig& cfg,
                         bool want_grads) {
  const Eigen::Index b = batch.size();
  const Eigen::Index n = batch.sent_left.cols();
  const Eigen::Index c = batch.graph_abs.cols();

  const Eigen::MatrixXd pl = batch.sent_left * params.projection.transpose();
  const Eigen::MatrixXd pr = batch.sent_right * params.projection.transpose();
  const Eigen::MatrixXd diff = pl - pr;

  Eigen::MatrixXd features(b, 2 * n + 2 * c);
  features.leftCols(n) = diff.cwiseAbs();
  features.middleCols(n, n) = pl.cwiseProduct(pr);
  features.middleCols(2 * n, c) = batch.graph_abs;
  features.rightCols(c) = batch.graph_dot;
  features.array().rowwise() *= batch.col_scale.transpose().array();

  const Eigen::MatrixXd logits = features * params.classifier; // B x 2

  LossGrads out;
  Eigen::MatrixXd d_logits;
  if (want_grads) d_logits = Eigen::MatrixXd::Zero(b, 2);

  // cross-entropy, max-subtraction stabilized
  for (Eigen::Index i = 0; i < b; ++i) {
    const double m = std::max(logits(i, 0), logits(i, 1));
    const double e0 = std::exp(logits(i, 0) - m), e1 = std::exp(logits(i, 1) - m);
    const double lse = m + std::log(e0 + e1);
    const int y = batch.labels[static_cast<std::size_t>(i)];
    out.loss += lse - logits(i, y);
    if (want_grads) {
      d_logits(i, 0) = e0 / (e0 + e1);
      d_logits(i, 1) = e1 / (e0 + e1);
      d_logits(i, y) -= 1.0;
    }
  }

  // cosine-embedding term on the projected sentence embeddings
  Eigen::MatrixXd d_pl, d_pr;
  if (want_grads) {
    d_pl = Eigen::MatrixXd::Zero(b, n);
    d_pr = Eigen::MatrixXd::Zero(b, n);
  }
  for (Eigen::Index i = 0; i < b; ++i) {
    const double na = pl.row(i).norm(), nb = pr.row(i).norm();
    const double cos = (na <= kNormTol || nb <= kNormTol) ? 0.0 : pl.row(i).dot(pr.row(i)) / (na * nb);
    const int y = batch.labels[static_cast<std::size_t>(i)];
    double dcos_weight = 0.0;
    if (y == 1) {
      out.loss += cfg.mu * (1.0 - cos);
      dcos_weight = -cfg.mu;
    } else if (cos - cfg.lambda > 0.0) {
      out.loss += cfg.mu * (cos - cfg.lambda);
      dcos_weight = cfg.mu;
    }
    if (want_grads && dcos_weight != 0.0 && na > kNormTol && nb > kNormTol) {
      d_pl.row(i) += dcos_weight * (pr.row(i) / (na * nb) - (cos / (na * na)) * pl.row(i));
      d_pr.row(i) += dcos_weight * (pl.row(i) / (na * nb) - (cos / (nb * nb)) * pr.row(i));
    }
  }

  if (!want_grads) return out;

  out.d_classifier = features.transpose() * d_logits;
  Eigen::MatrixXd d_features = d_logits * params.classifier.transpose();
  d_features.array().rowwise() *= batch.col_scale.transpose().array();
  const Eigen::MatrixXd d_abs = d_features.leftCols(n);
  const Eigen::MatrixXd d_mul = d_features.middleCols(n, n);
  const Eigen::MatrixXd sgn = diff.unaryExpr([](double x) { return sign0(x); });
  d_pl += d_abs.cwiseProduct(sgn) + d_mul.cwiseProduct(pr);
  d_pr += -d_abs.cwiseProduct(sgn) + d_mul.cwiseProduct(pl);
  out.d_projection = d_pl.transpose() * batch.sent_left + d_pr.transpose() * batch.sent_right;
  return out;
}

Batch build_batch(const Eigen::MatrixXd& sent_left, const Eigen::MatrixXd& sent_right,
                  const Eigen::MatrixXd& graph_left, const Eigen::MatrixXd& graph_right,
                  const PositiveLabels& positives, const NegativeLabels& negatives,
                  bool use_graph_features) {
  const Eigen::Index b = static_cast<Eigen::Index>(positives.pairs.size() + negatives.pairs.size());
  const Eigen::Index n = sent_left.cols(), c = graph_left.cols();
  if (sent_right.cols() != n) throw std::invalid_argument("sentence embedding dimensions differ");
  if (graph_right.cols() != c) throw std::invalid_argument("graph embedding dimensions differ");

  Batch batch;
  batch.sent_left.resize(b, n);
  batch.sent_right.resize(b, n);
  batch.graph_abs.resize(b, c);
  batch.graph_dot.resize(b, c);
  batch.labels.reserve(static_cast<std::size_t>(b));
  batch.col_scale = Eigen::VectorXd::Ones(2 * n + 2 * c);

  Eigen::Index row = 0;
  const auto add = [&](int l, int r, int y) {
    if (l < 0 || l >= sent_left.rows() || r < 0 || r >= sent_right.rows() || l >= graph_left.rows() ||
        r >= graph_right.rows())
      throw std::out_of_range("train_collab: labeled pair index outside the embedding matrices");
    batch.sent_left.row(row) = sent_left.row(l);
    batch.sent_right.row(row) = sent_right.row(r);
    if (use_graph_features) {
      batch.graph_abs.row(row) = (graph_left.row(l) - graph_right.row(r)).cwiseAbs();
      batch.graph_dot.row(row) = graph_left.row(l).cwiseProduct(graph_right.row(r));
    } else {
      batch.graph_abs.row(row).setZero();
      batch.graph_dot.row(row).setZero();
    }
    batch.labels.push_back(y);
    ++row;
  };
  for (const auto& p : positives.pairs) add(p.left, p.right, 1);
  for (const auto& m : negatives.pairs) add(m.left, m.right, 0);
  return batch;
}

} // namespace

CollabParams init_collab_params(int sentence_dim, int graph_dim, std::uint64_t seed) {
  if (sentence_dim <= 0 || graph_dim < 0) throw std::invalid_argument("init_collab_params: bad dims");
  CollabParams p;
  p.projection = Eigen::MatrixXd::Identity(sentence_dim, sentence_dim);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (Eigen::Index i = 0; i < p.projection.rows(); ++i)
    for (Eigen::Index j = 0; j < p.projection.cols(); ++j) p.projection(i, j) += noise(gen);
  p.classifier = Eigen::MatrixXd::Zero(2 * sentence_dim + 2 * graph_dim, 2);
  return p;
}

Eigen::VectorXd pair_features(const CollabParams& params, const Eigen::VectorXd& sent_left,
                              const Eigen::VectorXd& sent_right, const Eigen::VectorXd& graph_left,
                              const Eigen::VectorXd& graph_right, bool use_graph_features) {
  if (sent_left.size() != params.projection.cols() || sent_right.size() != params.projection.cols())
    throw std::invalid_argument("pair_features: sentence dimension mismatch");
  if (graph_left.size() != graph_right.size())
    throw std::invalid_argument("pair_features: graph dimension mismatch");
  const Eigen::VectorXd pl = params.projection * sent_left;
  const Eigen::VectorXd pr = params.projection * sent_right;
  const Eigen::Index n = pl.size(), c = graph_left.size();
  Eigen::VectorXd f(2 * n + 2 * c);
  f.head(n) = (pl - pr).cwiseAbs();
  f.segment(n, n) = pl.cwiseProduct(pr);
  if (use_graph_features) {
    f.segment(2 * n, c) = (graph_left - graph_right).cwiseAbs();
    f.tail(c) = graph_left.cwiseProduct(graph_right);
  } else {
    f.segment(2 * n, c).setZero();
    f.tail(c).setZero();
  }
  return f;
}

double cross_entropy_loss(const Eigen::Vector2d& logits, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("cross_entropy_loss: label must be 0 or 1");
  const double m = logits.maxCoeff();
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[label];
}

double cosine_embedding_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int label,
                             double lambda) {
  if (label != 0 && label != 1)
    throw std::invalid_argument("cosine_embedding_loss: label must be 0 or 1");
  const double cos = cosine_similarity(a, b);
  return label == 1 ? 1.0 - cos : std::max(0.0, cos - lambda);
}

CollabTrainResult train_collab(const Eigen::MatrixXd& sent_left, const Eigen::MatrixXd& sent_right,
                               const Eigen::MatrixXd& graph_left, const Eigen::MatrixXd& graph_right,
                               const PositiveLabels& positives, const NegativeLabels& negatives,
                               const CollabConfig& cfg) {
  if (positives.pairs.empty() && negatives.pairs.empty())
    throw std::invalid_argument("train_collab: no labeled pairs");
  Batch batch = build_batch(sent_left, sent_right, graph_left, graph_right, positives,
                            negatives, cfg.use_graph_features);
  CollabTrainResult result;
  result.params = init_collab_params(static_cast<int>(sent_left.cols()),
                                     static_cast<int>(graph_left.cols()), cfg.seed);

  {
    // measure initial column magnitudes once; constant columns stay unscaled
    // and near-dead ones are boosted at most 100x so noise dimensions cannot
    // dominate the steps
    const Eigen::Index n = batch.sent_left.cols();
    const Eigen::MatrixXd pl = batch.sent_left * result.params.projection.transpose();
    const Eigen::MatrixXd pr = batch.sent_right * result.params.projection.transpose();
    Eigen::MatrixXd f(batch.size(), batch.col_scale.size());
    f.leftCols(n) = (pl - pr).cwiseAbs();
    f.middleCols(n, n) = pl.cwiseProduct(pr);
    f.middleCols(2 * n, batch.graph_abs.cols()) = batch.graph_abs;
    f.rightCols(batch.graph_dot.cols()) = batch.graph_dot;
    const Eigen::VectorXd rms =
        (f.array().square().colwise().mean()).sqrt().matrix().transpose();
    for (Eigen::Index k = 0; k < batch.col_scale.size(); ++k)
      if (rms[k] > kNormTol)
        batch.col_scale[k] = kTargetColumnRms / std::max(rms[k], kTargetColumnRms / 100.0);
  }

  // loss is a sum over pairs; the step uses the mean gradient so the
  // configured rate is batch-size independent
  const double step = cfg.learning_rate / static_cast<double>(batch.size());
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const bool last = epoch == cfg.epochs;
    const LossGrads lg = loss_and_grads(result.params, batch, cfg, !last);
    if (!std::isfinite(lg.loss))
      throw std::runtime_error("train_collab: loss became non-finite at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(lg.loss);
    if (last) break;
    result.params.projection -= step * lg.d_projection;
    result.params.classifier -= step * lg.d_classifier;
  }
  // fold the column scales into the classifier so exported logits read
  // directly off raw pair_features output
  result.params.classifier.array().colwise() *= batch.col_scale.array();
  return result;
}

std::vector<Prediction> predict(const CollabParams& params, const CandidateSet& candidates,
                                const Eigen::MatrixXd& sent_left, const Eigen::MatrixXd& sent_right,
                                const Eigen::MatrixXd& graph_left, const Eigen::MatrixXd& graph_right,
                                const CollabConfig& cfg) {
  std::vector<Prediction> out;
  out.reserve(candidates.pairs.size());
  for (const auto& [l, r] : candidates.pairs) {
    if (l < 0 || l >= sent_left.rows() || r < 0 || r >= sent_right.rows())
      throw std::out_of_range("predict: candidate index outside the embedding matrices");
    const Eigen::VectorXd f =
        pair_features(params, sent_left.row(l).transpose(), sent_right.row(r).transpose(),
                      graph_left.row(l).transpose(), graph_right.row(r).transpose(),
                      cfg.use_graph_features);
    const Eigen::Vector2d logits = params.classifier.transpose() * f;
    const double m = logits.maxCoeff();
    const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
    const double prob = e1 / (e0 + e1);
    out.push_back({l, r, prob, prob > cfg.decision_threshold ? 1 : 0});
  }
  return out;
}

double gradient_check_collab(std::uint64_t seed) {
  const int n = 4, c = 3, pairs = 6;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto random_matrix = [&](Eigen::Index r, Eigen::Index cc, double scale) {
    Eigen::MatrixXd m(r, cc);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < cc; ++j) m(i, j) = scale * normal(gen);
    return m;
  };

  Batch batch;
  batch.sent_left = random_matrix(pairs, n, 1.0);
  batch.sent_right = random_matrix(pairs, n, 1.0);
  batch.graph_abs = random_matrix(pairs, c, 1.0).cwiseAbs();
  batch.graph_dot = random_matrix(pairs, c, 1.0);
  batch.labels = {1, 1, 1, 0, 0, 0};
  batch.col_scale = random_matrix(2 * n + 2 * c, 1, 1.0).cwiseAbs().col(0) +
                    Eigen::VectorXd::Constant(2 * n + 2 * c, 0.2);

  CollabConfig cfg;
  cfg.lambda = 0.1; // keeps several mismatch hinges active

  CollabParams params = init_collab_params(n, c, seed);
  params.classifier = random_matrix(2 * n + 2 * c, 2, 0.2);

  const LossGrads lg = loss_and_grads(params, batch, cfg, true);

  const double h = 1e-5;
  double max_rel = 0.0;
  const auto check_entry = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = loss_and_grads(params, batch, cfg, false).loss;
    *slot = saved - h;
    const double down = loss_and_grads(params, batch, cfg, false).loss;
    *slot = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic - fd) / denom);
  };
  for (Eigen::Index i = 0; i < params.projection.rows(); ++i)
    for (Eigen::Index j = 0; j < params.projection.cols(); ++j)
      check_entry(&params.projection(i, j), lg.d_projection(i, j));
  for (Eigen::Index i = 0; i < params.classifier.rows(); ++i)
    for (Eigen::Index j = 0; j < params.classifier.cols(); ++j)
      check_entry(&params.classifier(i, j), lg.d_classifier(i, j));
  return max_rel;
}

} // namespace ermatch
