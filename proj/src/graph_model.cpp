#include "ermatch/graph_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace ermatch {

namespace {

constexpr double kNormTol = 1e-12;

/// Edge list unrolled into directed messages (both directions share the
/// relation vector), plus 1/degree per node.
struct DirectedEdges {
  std::vector<int> src, dst, rel;
  Eigen::VectorXd inv_deg; // 0 for isolated nodes
  Eigen::Index count() const { return static_cast<Eigen::Index>(src.size()); }
};

DirectedEdges build_directed(const MultiRelGraph& g, const std::vector<int>& relation_map) {
  DirectedEdges de;
  de.src.reserve(2 * g.edges.size());
  de.dst.reserve(2 * g.edges.size());
  de.rel.reserve(2 * g.edges.size());
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(g.node_count());
  for (const auto& e : g.edges) {
    const int value_node = g.tuple_count + e.value;
    const int rel = relation_map[static_cast<std::size_t>(e.relation)];
    de.src.push_back(value_node);
    de.dst.push_back(e.tuple);
    de.rel.push_back(rel);
    de.src.push_back(e.tuple);
    de.dst.push_back(value_node);
    de.rel.push_back(rel);
    deg[e.tuple] += 1.0;
    deg[value_node] += 1.0;
  }
  de.inv_deg = (deg.array() > 0.0).select(deg.array().inverse(), 0.0);
  return de;
}

struct LayerCache {
  Eigen::MatrixXd X;     // per-message h_src + r_rel
  Eigen::MatrixXd U;     // pre-normalization update
  Eigen::MatrixXd Hnext; // normalized output
  Eigen::VectorXd norms;
};

struct ForwardCache {
  Eigen::MatrixXd h0;
  std::vector<LayerCache> layers;
};

Eigen::MatrixXd forward_cached(const DirectedEdges& de, const GnnParams& params,
                               const Eigen::MatrixXd& h0, ForwardCache* cache) {
  const Eigen::Index n = h0.rows(), c = h0.cols();
  Eigen::MatrixXd h = h0;
  if (cache) {
    cache->h0 = h0;
    cache->layers.resize(static_cast<std::size_t>(params.layers()));
  }
  for (int l = 0; l < params.layers(); ++l) {
    const Eigen::MatrixXd& w = params.transforms[static_cast<std::size_t>(l)];
    Eigen::MatrixXd x(de.count(), c);
    for (Eigen::Index e = 0; e < de.count(); ++e)
      x.row(e) = h.row(de.src[static_cast<std::size_t>(e)]) +
                 params.relation_vectors.row(de.rel[static_cast<std::size_t>(e)]);
    const Eigen::MatrixXd messages = x * w.transpose();
    Eigen::MatrixXd aggregated = Eigen::MatrixXd::Zero(n, c);
    for (Eigen::Index e = 0; e < de.count(); ++e)
      aggregated.row(de.dst[static_cast<std::size_t>(e)]) += messages.row(e);
    aggregated.array().colwise() *= de.inv_deg.array();

    Eigen::MatrixXd u = h + aggregated;
    Eigen::VectorXd norms = u.rowwise().norm();
    Eigen::MatrixXd hnext = u;
    for (Eigen::Index i = 0; i < n; ++i)
      if (norms[i] > kNormTol) hnext.row(i) /= norms[i];
    if (cache) {
      auto& lc = cache->layers[static_cast<std::size_t>(l)];
      lc.X = std::move(x);
      lc.U = std::move(u);
      lc.norms = std::move(norms);
      lc.Hnext = hnext;
    }
    h = std::move(hnext);
  }
  return h;
}

/// Backpropagate dL/dH_final through every layer, accumulating parameter
/// gradients. Returns nothing; node inputs are fixed.
void backward(const DirectedEdges& de, const GnnParams& params, const ForwardCache& cache,
              Eigen::MatrixXd grad_h, std::vector<Eigen::MatrixXd>& grad_w,
              Eigen::MatrixXd& grad_r) {
  const Eigen::Index c = grad_h.cols();
  for (int l = params.layers() - 1; l >= 0; --l) {
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& w = params.transforms[static_cast<std::size_t>(l)];

    // through the renormalization: dU = (G - h (h . G)) / |u|
    Eigen::MatrixXd grad_u(grad_h.rows(), c);
    for (Eigen::Index i = 0; i < grad_h.rows(); ++i) {
      if (lc.norms[i] > kNormTol) {
        const double hg = lc.Hnext.row(i).dot(grad_h.row(i));
        grad_u.row(i) = (grad_h.row(i) - hg * lc.Hnext.row(i)) / lc.norms[i];
      } else {
        grad_u.row(i) = grad_h.row(i);
      }
    }

    Eigen::MatrixXd grad_in = grad_u; // residual path
    Eigen::MatrixXd gm(de.count(), c);
    for (Eigen::Index e = 0; e < de.count(); ++e) {
      const int dst = de.dst[static_cast<std::size_t>(e)];
      gm.row(e) = grad_u.row(dst) * de.inv_deg[dst];
    }
    grad_w[static_cast<std::size_t>(l)] += gm.transpose() * lc.X;
    const Eigen::MatrixXd grad_x = gm * w;
    for (Eigen::Index e = 0; e < de.count(); ++e) {
      grad_in.row(de.src[static_cast<std::size_t>(e)]) += grad_x.row(e);
      grad_r.row(de.rel[static_cast<std::size_t>(e)]) += grad_x.row(e);
    }
    grad_h = std::move(grad_in);
  }
}

/// d(1 - cos(a,b)) contributions; zero vectors contribute cosine 0, no grad.
double cosine_distance_with_grad(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                                 double weight, Eigen::RowVectorXd* da, Eigen::RowVectorXd* db) {
  const double na = a.norm(), nb = b.norm();
  if (na <= kNormTol || nb <= kNormTol) return 1.0;
  const double cos = a.dot(b) / (na * nb);
  if (da && db) {
    const Eigen::RowVectorXd dcos_da = b / (na * nb) - (cos / (na * na)) * a;
    const Eigen::RowVectorXd dcos_db = a / (na * nb) - (cos / (nb * nb)) * b;
    *da -= weight * dcos_da;
    *db -= weight * dcos_db;
  }
  return 1.0 - cos;
}

std::vector<std::vector<int>> group_negatives(const NegativeLabels& negatives,
                                              std::size_t positive_count, int cap) {
  std::vector<std::vector<int>> groups(positive_count);
  for (std::size_t n = 0; n < negatives.pairs.size(); ++n) {
    const int s = negatives.pairs[n].source;
    if (s < 0 || static_cast<std::size_t>(s) >= positive_count) continue; // unanchored
    auto& g = groups[static_cast<std::size_t>(s)];
    if (static_cast<int>(g.size()) < cap) g.push_back(static_cast<int>(n));
  }
  return groups;
}

struct LossGrads {
  double loss = 0.0;
  Eigen::MatrixXd left, right; // dL/d(tuple embeddings)
};

LossGrads margin_loss_impl(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                           const PositiveLabels& positives, const NegativeLabels& negatives,
                           const GraphTrainConfig& cfg, bool want_grads) {
  LossGrads out;
  if (want_grads) {
    out.left = Eigen::MatrixXd::Zero(left.rows(), left.cols());
    out.right = Eigen::MatrixXd::Zero(right.rows(), right.cols());
  }
  const auto check = [&](int l, int r) {
    if (l < 0 || l >= left.rows() || r < 0 || r >= right.rows())
      throw std::out_of_range("margin_loss: labeled pair index outside the embedding matrices");
  };
  const auto groups = group_negatives(negatives, positives.pairs.size(), cfg.negatives_per_positive);

  for (std::size_t p = 0; p < positives.pairs.size(); ++p) {
    const auto& pos = positives.pairs[p];
    check(pos.left, pos.right);
    const Eigen::RowVectorXd a = left.row(pos.left), b = right.row(pos.right);
    const double d_pos = cosine_distance_with_grad(a, b, 0.0, nullptr, nullptr);
    double pos_weight = 0.0;
    for (const int n : groups[p]) {
      const auto& neg = negatives.pairs[static_cast<std::size_t>(n)];
      check(neg.left, neg.right);
      const Eigen::RowVectorXd na = left.row(neg.left), nb = right.row(neg.right);
      const double d_neg = cosine_distance_with_grad(na, nb, 0.0, nullptr, nullptr);
      const double term = d_pos + cfg.gamma - d_neg;
      if (term <= 0.0) continue; // hinge inactive; subgradient 0 at the kink
      out.loss += term;
      pos_weight += 1.0;
      if (want_grads) {
        Eigen::RowVectorXd dna = out.left.row(neg.left), dnb = out.right.row(neg.right);
        cosine_distance_with_grad(na, nb, -1.0, &dna, &dnb);
        out.left.row(neg.left) = dna;
        out.right.row(neg.right) = dnb;
      }
    }
    if (want_grads && pos_weight > 0.0) {
      Eigen::RowVectorXd da = out.left.row(pos.left), db = out.right.row(pos.right);
      cosine_distance_with_grad(a, b, pos_weight, &da, &db);
      out.left.row(pos.left) = da;
      out.right.row(pos.right) = db;
    }
  }
  return out;
}

} // namespace

GnnParams init_gnn_params(const std::vector<std::string>& relation_names, int dim, int layers,
                          std::uint64_t seed) {
  if (dim <= 0 || layers < 1) throw std::invalid_argument("init_gnn_params: bad dimensions");
  GnnParams p;
  p.relation_names = relation_names;
  p.relation_vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(relation_names.size()), dim);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(dim, dim);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) += noise(gen);
    p.transforms.push_back(std::move(w));
  }
  return p;
}

std::vector<int> map_relations(const MultiRelGraph& g, const GnnParams& params) {
  std::vector<int> map;
  map.reserve(g.relations.size());
  for (const auto& name : g.relations) {
    int found = -1;
    for (std::size_t i = 0; i < params.relation_names.size(); ++i)
      if (params.relation_names[i] == name) found = static_cast<int>(i);
    if (found < 0) throw std::runtime_error("graph relation \"" + name + "\" missing from parameters");
    map.push_back(found);
  }
  return map;
}

Eigen::MatrixXd init_node_embeddings(const MultiRelGraph& g, const EmbeddingProvider& provider) {
  const int c = provider.dimension();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g.node_count(), c);
  for (std::size_t v = 0; v < g.value_texts.size(); ++v)
    h.row(g.tuple_count + static_cast<Eigen::Index>(v)) = provider.embed_text(g.value_texts[v]).transpose();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(g.tuple_count);
  for (const auto& e : g.edges) {
    h.row(e.tuple) += h.row(g.tuple_count + e.value);
    counts[e.tuple] += 1.0;
  }
  for (int t = 0; t < g.tuple_count; ++t)
    if (counts[t] > 0.0) h.row(t) /= counts[t];
  return l2_normalize_rows(h);
}

Eigen::MatrixXd gnn_forward(const MultiRelGraph& g, const std::vector<int>& relation_map,
                            const GnnParams& params, const Eigen::MatrixXd& h0) {
  if (h0.rows() != g.node_count()) throw std::invalid_argument("gnn_forward: node count mismatch");
  if (h0.cols() != params.dim()) throw std::invalid_argument("gnn_forward: dimension mismatch");
  const DirectedEdges de = build_directed(g, relation_map);
  return forward_cached(de, params, h0, nullptr);
}

Eigen::MatrixXd gnn_forward(const MultiRelGraph& g, const GnnParams& params,
                            const Eigen::MatrixXd& h0) {
  return gnn_forward(g, map_relations(g, params), params, h0);
}

double margin_loss(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                   const PositiveLabels& positives, const NegativeLabels& negatives,
                   const GraphTrainConfig& cfg) {
  return margin_loss_impl(left, right, positives, negatives, cfg, false).loss;
}

GraphTrainResult train_graph(const MultiRelGraph& left_graph, const MultiRelGraph& right_graph,
                             const Eigen::MatrixXd& left_h0, const Eigen::MatrixXd& right_h0,
                             const PositiveLabels& positives, const NegativeLabels& negatives,
                             const GraphTrainConfig& cfg) {
  if (positives.pairs.empty()) throw std::invalid_argument("train_graph: no positive labels");

  // relation vectors are shared by attribute name across the two graphs
  std::vector<std::string> shared = left_graph.relations;
  for (const auto& name : right_graph.relations)
    if (std::find(shared.begin(), shared.end(), name) == shared.end()) shared.push_back(name);

  GraphTrainResult result;
  result.params = init_gnn_params(shared, cfg.dim, cfg.layers, cfg.seed);
  const DirectedEdges left_edges = build_directed(left_graph, map_relations(left_graph, result.params));
  const DirectedEdges right_edges = build_directed(right_graph, map_relations(right_graph, result.params));

  // loss sums over positive x negative hinge terms; normalize the step by the
  // (fixed) term count so the configured rate does not scale with label volume
  std::size_t term_count = 0;
  for (const auto& g : group_negatives(negatives, positives.pairs.size(), cfg.negatives_per_positive))
    term_count += g.size();
  const double step = cfg.learning_rate / static_cast<double>(std::max<std::size_t>(term_count, 1));

  if (cfg.epochs == 0) {
    result.left_embeddings = left_h0.topRows(left_graph.tuple_count);
    result.right_embeddings = right_h0.topRows(right_graph.tuple_count);
    result.loss_trace.push_back(margin_loss_impl(result.left_embeddings, result.right_embeddings,
                                                 positives, negatives, cfg, false)
                                    .loss);
    return result;
  }

  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    ForwardCache cache_l, cache_r;
    const Eigen::MatrixXd hl = forward_cached(left_edges, result.params, left_h0, &cache_l);
    const Eigen::MatrixXd hr = forward_cached(right_edges, result.params, right_h0, &cache_r);

    const bool last = epoch == cfg.epochs;
    const LossGrads lg = margin_loss_impl(hl.topRows(left_graph.tuple_count),
                                          hr.topRows(right_graph.tuple_count), positives, negatives,
                                          cfg, !last);
    if (!std::isfinite(lg.loss))
      throw std::runtime_error("train_graph: loss became non-finite at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(lg.loss);
    if (last) {
      result.left_embeddings = hl.topRows(left_graph.tuple_count);
      result.right_embeddings = hr.topRows(right_graph.tuple_count);
      break;
    }

    std::vector<Eigen::MatrixXd> grad_w(static_cast<std::size_t>(cfg.layers),
                                        Eigen::MatrixXd::Zero(cfg.dim, cfg.dim));
    Eigen::MatrixXd grad_r =
        Eigen::MatrixXd::Zero(result.params.relation_vectors.rows(), cfg.dim);

    Eigen::MatrixXd top_l = Eigen::MatrixXd::Zero(left_graph.node_count(), cfg.dim);
    top_l.topRows(left_graph.tuple_count) = lg.left;
    backward(left_edges, result.params, cache_l, std::move(top_l), grad_w, grad_r);

    Eigen::MatrixXd top_r = Eigen::MatrixXd::Zero(right_graph.node_count(), cfg.dim);
    top_r.topRows(right_graph.tuple_count) = lg.right;
    backward(right_edges, result.params, cache_r, std::move(top_r), grad_w, grad_r);

    for (int l = 0; l < cfg.layers; ++l)
      result.params.transforms[static_cast<std::size_t>(l)] -= step * grad_w[static_cast<std::size_t>(l)];
    result.params.relation_vectors -= step * grad_r;
  }
  return result;
}

double gradient_check_graph(std::uint64_t seed) {
  // two small graphs over a shared 2-attribute schema
  const auto make_graph = [](int tuples, std::vector<MultiRelGraph::Edge> edges, int values) {
    MultiRelGraph g;
    g.tuple_count = tuples;
    for (int i = 0; i < tuples; ++i) g.tuple_ids.push_back("t" + std::to_string(i));
    for (int v = 0; v < values; ++v) g.value_texts.push_back("v" + std::to_string(v));
    g.relations = {"name", "brand"};
    g.edges = std::move(edges);
    return g;
  };
  const MultiRelGraph gl = make_graph(3, {{0, 0, 0}, {0, 1, 1}, {1, 0, 0}, {1, 1, 2}, {2, 0, 1}}, 3);
  const MultiRelGraph gr = make_graph(3, {{0, 0, 0}, {1, 0, 1}, {1, 1, 0}, {2, 1, 1}}, 2);

  GraphTrainConfig cfg;
  cfg.dim = 5;
  cfg.layers = 2;
  cfg.gamma = 0.3; // leaves a mix of active and inactive hinges
  cfg.negatives_per_positive = 20;

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto random_matrix = [&](Eigen::Index r, Eigen::Index c, double scale) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * normal(gen);
    return m;
  };
  const Eigen::MatrixXd h0l = l2_normalize_rows(random_matrix(gl.node_count(), cfg.dim, 1.0));
  const Eigen::MatrixXd h0r = l2_normalize_rows(random_matrix(gr.node_count(), cfg.dim, 1.0));

  GnnParams params = init_gnn_params(gl.relations, cfg.dim, cfg.layers, seed);
  params.relation_vectors = random_matrix(params.relation_vectors.rows(), cfg.dim, 0.05);
  for (auto& w : params.transforms) w += random_matrix(cfg.dim, cfg.dim, 0.05);

  PositiveLabels pos;
  pos.pairs = {{0, 0, 1.0}, {1, 1, 1.0}};
  NegativeLabels neg;
  neg.pairs = {{2, 0, 0}, {0, 1, 0}, {1, 0, 1}, {2, 1, 1}};

  const DirectedEdges del = build_directed(gl, map_relations(gl, params));
  const DirectedEdges der = build_directed(gr, map_relations(gr, params));

  const auto loss_of = [&](const GnnParams& p) {
    const Eigen::MatrixXd hl = forward_cached(del, p, h0l, nullptr);
    const Eigen::MatrixXd hr = forward_cached(der, p, h0r, nullptr);
    return margin_loss_impl(hl.topRows(gl.tuple_count), hr.topRows(gr.tuple_count), pos, neg, cfg,
                            false)
        .loss;
  };

  // analytic gradients
  ForwardCache cache_l, cache_r;
  const Eigen::MatrixXd hl = forward_cached(del, params, h0l, &cache_l);
  const Eigen::MatrixXd hr = forward_cached(der, params, h0r, &cache_r);
  const LossGrads lg = margin_loss_impl(hl.topRows(gl.tuple_count), hr.topRows(gr.tuple_count),
                                        pos, neg, cfg, true);
  std::vector<Eigen::MatrixXd> grad_w(static_cast<std::size_t>(cfg.layers),
                                      Eigen::MatrixXd::Zero(cfg.dim, cfg.dim));
  Eigen::MatrixXd grad_r = Eigen::MatrixXd::Zero(params.relation_vectors.rows(), cfg.dim);
  Eigen::MatrixXd top_l = Eigen::MatrixXd::Zero(gl.node_count(), cfg.dim);
  top_l.topRows(gl.tuple_count) = lg.left;
  backward(del, params, cache_l, std::move(top_l), grad_w, grad_r);
  Eigen::MatrixXd top_r = Eigen::MatrixXd::Zero(gr.node_count(), cfg.dim);
  top_r.topRows(gr.tuple_count) = lg.right;
  backward(der, params, cache_r, std::move(top_r), grad_w, grad_r);

  const double h = 1e-5;
  double max_rel = 0.0;
  const auto check_entry = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = loss_of(params);
    *slot = saved - h;
    const double down = loss_of(params);
    *slot = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic - fd) / denom);
  };
  for (int l = 0; l < cfg.layers; ++l) {
    auto& w = params.transforms[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        check_entry(&w(i, j), grad_w[static_cast<std::size_t>(l)](i, j));
  }
  for (Eigen::Index i = 0; i < params.relation_vectors.rows(); ++i)
    for (Eigen::Index j = 0; j < params.relation_vectors.cols(); ++j)
      check_entry(&params.relation_vectors(i, j), grad_r(i, j));
  return max_rel;
}

} // namespace ermatch
