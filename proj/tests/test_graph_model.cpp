#include <doctest.h>

#include <cmath>
#include <random>

#include "ermatch/graph_model.hpp"
#include "oracles.hpp"

using namespace ermatch;

namespace {

MultiRelGraph toy_graph(int tuples, int values, std::vector<MultiRelGraph::Edge> edges,
                        std::vector<std::string> relations = {"r0", "r1"}) {
  MultiRelGraph g;
  g.tuple_count = tuples;
  for (int i = 0; i < tuples; ++i) g.tuple_ids.push_back("t" + std::to_string(i));
  for (int v = 0; v < values; ++v) g.value_texts.push_back("v" + std::to_string(v));
  g.relations = std::move(relations);
  g.edges = std::move(edges);
  return g;
}

GnnParams manual_params(int dim, int layers, int relations) {
  GnnParams p;
  for (int r = 0; r < relations; ++r) p.relation_names.push_back("r" + std::to_string(r));
  p.relation_vectors = Eigen::MatrixXd::Zero(relations, dim);
  for (int l = 0; l < layers; ++l) p.transforms.push_back(Eigen::MatrixXd::Identity(dim, dim));
  return p;
}

/// Naive per-edge forward recomputation with scalar loops.
Eigen::MatrixXd naive_forward(const MultiRelGraph& g, const GnnParams& params,
                              Eigen::MatrixXd h) {
  const int n = static_cast<int>(h.rows()), c = static_cast<int>(h.cols());
  for (int layer = 0; layer < params.layers(); ++layer) {
    const Eigen::MatrixXd& w = params.transforms[static_cast<std::size_t>(layer)];
    Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(n, c);
    std::vector<int> deg(static_cast<std::size_t>(n), 0);
    const auto send = [&](int src, int dst, int rel) {
      for (int i = 0; i < c; ++i) {
        double acc = 0.0;
        for (int j = 0; j < c; ++j) acc += w(i, j) * (h(src, j) + params.relation_vectors(rel, j));
        agg(dst, i) += acc;
      }
      ++deg[static_cast<std::size_t>(dst)];
    };
    for (const auto& e : g.edges) {
      send(g.tuple_count + e.value, e.tuple, e.relation);
      send(e.tuple, g.tuple_count + e.value, e.relation);
    }
    Eigen::MatrixXd next(n, c);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) {
        const double o = deg[static_cast<std::size_t>(i)] > 0
                             ? agg(i, j) / deg[static_cast<std::size_t>(i)]
                             : 0.0;
        next(i, j) = h(i, j) + o;
      }
      const double norm = next.row(i).norm();
      if (norm > 1e-12) next.row(i) /= norm;
    }
    h = next;
  }
  return h;
}

struct ToyProvider final : EmbeddingProvider {
  int dim_;
  explicit ToyProvider(int dim) : dim_(dim) {}
  int dimension() const override { return dim_; }
  Eigen::VectorXd embed_text(const std::string& text) const override {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
    if (text.empty()) return v;
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : text) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    v[static_cast<Eigen::Index>(h % dim_)] = 1.0;
    v[static_cast<Eigen::Index>((h >> 8) % dim_)] += 0.7;
    v[static_cast<Eigen::Index>((h >> 16) % dim_)] += 0.4;
    return v / v.norm();
  }
};

} // namespace

TEST_CASE("init embeddings: single value, isolated node, two-value mean") {
  const MultiRelGraph g =
      toy_graph(3, 2, {{0, 0, 0}, {1, 0, 0}, {1, 1, 1}}); // t2 isolated
  const ToyProvider provider(4);
  const Eigen::MatrixXd h = init_node_embeddings(g, provider);
  const Eigen::VectorXd e0 = provider.embed_text("v0"), e1 = provider.embed_text("v1");
  CHECK((h.row(0).transpose() - e0).norm() < 1e-12); // mean of one value
  const Eigen::VectorXd mean = ((e0 + e1) / 2.0).normalized();
  CHECK((h.row(1).transpose() - mean).norm() < 1e-12);
  CHECK(h.row(2).isZero()); // no edges, zero vector
}

TEST_CASE("identity forward: one edge pulls the value vector into the tuple") {
  const MultiRelGraph g = toy_graph(1, 1, {{0, 0, 0}});
  GnnParams p = manual_params(3, 1, 2);
  Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(2, 3);
  h0.row(1) << 0.6, 0.0, 0.8; // unit value vector
  const Eigen::MatrixXd h1 = gnn_forward(g, p, h0);
  CHECK((h1.row(0) - h0.row(1)).norm() < 1e-12); // normalize(0 + mean(v)) = v
}

TEST_CASE("no edges leaves normalized embeddings unchanged") {
  const MultiRelGraph g = toy_graph(3, 0, {});
  GnnParams p = manual_params(3, 2, 2);
  Eigen::MatrixXd h0(3, 3);
  h0 << 1, 0, 0, 0, 1, 0, 0, 0, 0; // includes a zero row
  CHECK((gnn_forward(g, p, h0) - h0).norm() == 0.0);
}

TEST_CASE("forward matches the naive per-edge oracle") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n;
  const MultiRelGraph g = toy_graph(2, 2, {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}});
  GnnParams p = manual_params(4, 2, 2);
  for (auto& w : p.transforms)
    for (int i = 0; i < w.size(); ++i) w.data()[i] += 0.3 * n(gen);
  for (int i = 0; i < p.relation_vectors.size(); ++i) p.relation_vectors.data()[i] = 0.2 * n(gen);
  Eigen::MatrixXd h0(4, 4);
  for (int i = 0; i < h0.size(); ++i) h0.data()[i] = n(gen);
  h0 = l2_normalize_rows(h0);
  const Eigen::MatrixXd fast = gnn_forward(g, p, h0);
  const Eigen::MatrixXd slow = naive_forward(g, p, h0);
  CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("forward is permutation-equivariant over value nodes") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n;
  const MultiRelGraph g = toy_graph(2, 3, {{0, 0, 0}, {0, 1, 1}, {1, 0, 2}, {1, 1, 0}});
  // swap value nodes 0 and 2 everywhere
  MultiRelGraph gp = g;
  for (auto& e : gp.edges) e.value = e.value == 0 ? 2 : (e.value == 2 ? 0 : e.value);
  GnnParams p = manual_params(3, 2, 2);
  for (auto& w : p.transforms)
    for (int i = 0; i < w.size(); ++i) w.data()[i] += 0.2 * n(gen);
  Eigen::MatrixXd h0(5, 3);
  for (int i = 0; i < h0.size(); ++i) h0.data()[i] = n(gen);
  Eigen::MatrixXd h0p = h0;
  h0p.row(2 + 0).swap(h0p.row(2 + 2));
  const Eigen::MatrixXd out = gnn_forward(g, p, h0);
  Eigen::MatrixXd outp = gnn_forward(gp, p, h0p);
  outp.row(2 + 0).swap(outp.row(2 + 2));
  CHECK((out - outp).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("margin loss hinge arithmetic") {
  // cosine distances realized through planted unit vectors
  const auto vec_at_cos = [](double cos) {
    Eigen::RowVector2d v(cos, std::sqrt(1.0 - cos * cos));
    return v;
  };
  Eigen::MatrixXd left(2, 2), right(2, 2);
  left.row(0) << 1.0, 0.0;
  right.row(0) = vec_at_cos(0.9); // d+ = 0.1
  left.row(1) << 1.0, 0.0;
  right.row(1) = vec_at_cos(-0.2); // d- = 1.2

  GraphTrainConfig cfg;
  cfg.gamma = 1.0;
  PositiveLabels p;
  p.pairs = {{0, 0, 0.9}};
  NegativeLabels n;
  n.pairs = {{1, 1, 0}};
  CHECK(margin_loss(left, right, p, n, cfg) == doctest::Approx(0.0).epsilon(1e-12));

  right.row(0) = vec_at_cos(0.5);  // d+ = 0.5
  right.row(1) = vec_at_cos(0.2);  // d- = 0.8
  CHECK(margin_loss(left, right, p, n, cfg) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("margin loss equals a hand-summed scalar oracle on a toy batch") {
  std::mt19937_64 gen(15);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd left(4, 5), right(4, 5);
  for (int i = 0; i < left.size(); ++i) left.data()[i] = nd(gen);
  for (int i = 0; i < right.size(); ++i) right.data()[i] = nd(gen);
  PositiveLabels p;
  p.pairs = {{0, 0, 1.0}, {1, 1, 1.0}};
  NegativeLabels n;
  n.pairs = {{2, 0, 0}, {0, 2, 0}, {3, 0, 0}, {2, 1, 1}, {1, 3, 1}, {3, 1, 1}};
  GraphTrainConfig cfg;
  cfg.gamma = 0.6;

  double expected = 0.0;
  for (std::size_t pi = 0; pi < p.pairs.size(); ++pi) {
    const auto& pp = p.pairs[pi];
    std::vector<double> av(5), bv(5);
    for (int k = 0; k < 5; ++k) {
      av[static_cast<std::size_t>(k)] = left(pp.left, k);
      bv[static_cast<std::size_t>(k)] = right(pp.right, k);
    }
    const double dpos = 1.0 - oracle::scalar_cosine(av, bv);
    for (const auto& nn : n.pairs) {
      if (nn.source != static_cast<int>(pi)) continue;
      std::vector<double> nav(5), nbv(5);
      for (int k = 0; k < 5; ++k) {
        nav[static_cast<std::size_t>(k)] = left(nn.left, k);
        nbv[static_cast<std::size_t>(k)] = right(nn.right, k);
      }
      const double dneg = 1.0 - oracle::scalar_cosine(nav, nbv);
      expected += std::max(0.0, dpos + cfg.gamma - dneg);
    }
  }
  CHECK(margin_loss(left, right, p, n, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss is nonnegative and zero exactly when every hinge is inactive") {
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(3, 3);
  PositiveLabels p;
  p.pairs = {{0, 0, 1.0}};
  NegativeLabels n;
  n.pairs = {{1, 2, 0}};
  GraphTrainConfig cfg;
  cfg.gamma = 0.0;
  // d+ = 0 (same unit vector), d- = 1 (orthogonal): term = 0 + 0 - 1 < 0
  CHECK(margin_loss(e, e, p, n, cfg) == 0.0);
  cfg.gamma = 1.0; // boundary: term = exactly 0, hinge stays inactive
  CHECK(margin_loss(e, e, p, n, cfg) == 0.0);
  cfg.gamma = 1.5;
  CHECK(margin_loss(e, e, p, n, cfg) == doctest::Approx(0.5));
}

TEST_CASE("out-of-range label indices are rejected") {
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(2, 2);
  PositiveLabels p;
  p.pairs = {{0, 5, 1.0}};
  GraphTrainConfig cfg;
  CHECK_THROWS_AS(margin_loss(e, e, p, {}, cfg), std::out_of_range);
}

TEST_CASE("analytic gradients agree with central finite differences") {
  CHECK(gradient_check_graph(7) < 1e-4);
  CHECK(gradient_check_graph(20260810) < 1e-4);
}

TEST_CASE("training reduces the loss and is bit-deterministic") {
  const MultiRelGraph gl = toy_graph(4, 3, {{0, 0, 0}, {1, 0, 0}, {1, 1, 1}, {2, 0, 2}, {3, 1, 2}});
  const MultiRelGraph gr = toy_graph(4, 3, {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}, {3, 1, 0}, {3, 0, 2}});
  const ToyProvider provider(8);
  const Eigen::MatrixXd h0l = init_node_embeddings(gl, provider);
  const Eigen::MatrixXd h0r = init_node_embeddings(gr, provider);
  PositiveLabels p;
  p.pairs = {{0, 0, 1.0}, {1, 1, 1.0}};
  NegativeLabels n;
  n.pairs = {{2, 0, 0}, {0, 2, 0}, {3, 1, 1}, {1, 3, 1}};
  GraphTrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 40;
  cfg.seed = 3;

  const GraphTrainResult a = train_graph(gl, gr, h0l, h0r, p, n, cfg);
  REQUIRE(a.loss_trace.size() == 41);
  CHECK(a.loss_trace.back() < a.loss_trace.front());
  CHECK(a.left_embeddings.rows() == 4);

  const GraphTrainResult b = train_graph(gl, gr, h0l, h0r, p, n, cfg);
  CHECK(a.loss_trace == b.loss_trace); // bit-identical under a fixed seed
  CHECK(a.left_embeddings == b.left_embeddings);
}

TEST_CASE("zero training epochs return the initial embeddings unchanged") {
  const MultiRelGraph gl = toy_graph(2, 1, {{0, 0, 0}});
  const MultiRelGraph gr = toy_graph(2, 1, {{0, 0, 0}});
  const ToyProvider provider(4);
  const Eigen::MatrixXd h0l = init_node_embeddings(gl, provider);
  const Eigen::MatrixXd h0r = init_node_embeddings(gr, provider);
  PositiveLabels p;
  p.pairs = {{0, 0, 1.0}};
  GraphTrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 0;
  const GraphTrainResult r = train_graph(gl, gr, h0l, h0r, p, {}, cfg);
  CHECK(r.left_embeddings == h0l.topRows(2));
  CHECK(r.right_embeddings == h0r.topRows(2));
  CHECK(r.loss_trace.size() == 1);
}

TEST_CASE("empty positive set and diverging rates abort with diagnostics") {
  const MultiRelGraph g = toy_graph(2, 1, {{0, 0, 0}});
  const ToyProvider provider(4);
  const Eigen::MatrixXd h0 = init_node_embeddings(g, provider);
  GraphTrainConfig cfg;
  cfg.dim = 4;
  CHECK_THROWS_AS(train_graph(g, g, h0, h0, {}, {}, cfg), std::invalid_argument);

  PositiveLabels p;
  p.pairs = {{0, 0, 1.0}};
  NegativeLabels n;
  n.pairs = {{1, 1, 0}};
  Eigen::MatrixXd h0r = h0; // distinct right side so the gradients are nonzero
  h0r.col(0).swap(h0r.col(1));
  h0r.row(1) << 0.5, 0.5, 0.5, 0.5;
  cfg.learning_rate = 1e300; // guaranteed overflow
  cfg.epochs = 5;
  CHECK_THROWS_WITH_AS(train_graph(g, g, h0, h0r, p, n, cfg), doctest::Contains("non-finite"),
                       std::runtime_error);
}
