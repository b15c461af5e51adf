#include "ermatch/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ermatch/anomaly.hpp"
#include "ermatch/blocking.hpp"
#include "ermatch/dataset.hpp"
#include "ermatch/io.hpp"
#include "ermatch/metrics.hpp"
#include "ermatch/relgraph.hpp"
#include "ermatch/text.hpp"

namespace ermatch {

namespace {

using nlohmann::json;

std::uint64_t derive_seed(const PipelineConfig& cfg, const char* purpose) {
  return fnv1a64(purpose, cfg.seed ^ 0x6a09e667f3bcc908ull);
}

Dataset load_side(const PipelineConfig& cfg, bool left) {
  const auto& path = left ? cfg.left_csv : cfg.right_csv;
  const auto& idcol = left ? cfg.left_id_column : cfg.right_id_column;
  return load_csv(path, idcol, left ? "left" : "right");
}

std::unordered_map<std::string, int> index_by_id(const Dataset& d) {
  std::unordered_map<std::string, int> m;
  m.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.emplace(d.tuples[i].id, static_cast<int>(i));
  return m;
}

std::unordered_map<std::string, int> index_by_id(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, int> m;
  m.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], static_cast<int>(i));
  return m;
}

int lookup(const std::unordered_map<std::string, int>& m, const std::string& id,
           const char* what) {
  const auto it = m.find(id);
  if (it == m.end())
    throw std::runtime_error(std::string(what) + " references unknown tuple id \"" + id + "\"");
  return it->second;
}

std::unique_ptr<EmbeddingProvider> sentence_provider(const PipelineConfig& cfg, bool left) {
  EmbeddingProviderSpec spec = cfg.embedding;
  spec.seed = derive_seed(cfg, "embed");
  if (spec.kind == "file") {
    const auto& path = left ? cfg.embedding_left_path : cfg.embedding_right_path;
    if (!path)
      throw std::runtime_error("file embedding provider needs embedding.left_path and embedding.right_path");
    spec.path = *path;
  }
  return make_provider(spec);
}

void ensure_out_dir(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
}

void require_hash(const std::string& found, const std::string& expected, const std::string& path,
                  bool force) {
  if (force || found == expected) return;
  throw std::runtime_error(path + " was produced under config hash " +
                           (found.empty() ? "<none>" : found) + ", current is " + expected +
                           " (rerun upstream stages or pass --force)");
}

/// Attach each negative to a positive: SNLG builds negatives by replacing one
/// side, so a negative sharing its right id with a positive came from that
/// positive (right ids are unique in P), else its left id locates the source.
/// Unmatched negatives train the classifier but are skipped by the margin loss.
void assign_sources(const PositiveLabels& positives, NegativeLabels& negatives) {
  std::unordered_map<int, int> by_right, by_left;
  for (std::size_t p = 0; p < positives.pairs.size(); ++p) {
    by_left.emplace(positives.pairs[p].left, static_cast<int>(p));
    by_right.emplace(positives.pairs[p].right, static_cast<int>(p));
  }
  for (auto& n : negatives.pairs) {
    if (const auto it = by_right.find(n.right); it != by_right.end()) n.source = it->second;
    else if (const auto it2 = by_left.find(n.left); it2 != by_left.end()) n.source = it2->second;
    else n.source = -1;
  }
}

struct LoadedLabels {
  PositiveLabels positives;
  NegativeLabels negatives;
  std::vector<std::pair<std::string, std::string>> positive_ids, negative_ids;
};

LoadedLabels load_labels_indexed(const std::string& path,
                                 const std::unordered_map<std::string, int>& left_index,
                                 const std::unordered_map<std::string, int>& right_index,
                                 const std::string& expected_hash, bool force) {
  auto [labels, hash] = read_labels_tsv(path);
  require_hash(hash, expected_hash, path, force);
  LoadedLabels out;
  out.positive_ids = labels.positives;
  out.negative_ids = labels.negatives;
  for (const auto& [l, r] : labels.positives)
    out.positives.pairs.push_back({lookup(left_index, l, "labels"), lookup(right_index, r, "labels"), 0.0});
  for (const auto& [l, r] : labels.negatives)
    out.negatives.pairs.push_back({lookup(left_index, l, "labels"), lookup(right_index, r, "labels"), -1});
  assign_sources(out.positives, out.negatives);
  return out;
}

json stats_to_json(const GraphStats& s) {
  return json{{"nodes", s.nodes}, {"edges", s.edges}, {"relations", s.relations}};
}

json metrics_to_json(const MetricsReport& r) {
  return json{{"tp", r.tp},
              {"fp", r.fp},
              {"fn", r.fn},
              {"tn", r.tn},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"precision_defined", r.precision_defined},
              {"recall_defined", r.recall_defined},
              {"f1_defined", r.f1_defined}};
}

} // namespace

PipelineConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  const auto opt_string = [&](const json& node, const char* key) -> std::optional<std::string> {
    if (!node.contains(key) || node[key].is_null()) return std::nullopt;
    return node[key].get<std::string>();
  };
  if (!j.contains("left_csv") || !j.contains("right_csv"))
    throw std::runtime_error("config: left_csv and right_csv are required");
  cfg.left_csv = j["left_csv"].get<std::string>();
  cfg.right_csv = j["right_csv"].get<std::string>();
  cfg.left_id_column = opt_string(j, "left_id_column");
  cfg.right_id_column = opt_string(j, "right_id_column");
  cfg.ground_truth = opt_string(j, "ground_truth");
  cfg.labels_file = opt_string(j, "labels_file");
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    if (e.contains("kind")) cfg.embedding.kind = e["kind"].get<std::string>();
    if (e.contains("dimension")) cfg.embedding.dimension = e["dimension"].get<int>();
    if (e.contains("ngram_sizes")) cfg.embedding.ngram_sizes = e["ngram_sizes"].get<std::vector<int>>();
    cfg.embedding_left_path = opt_string(e, "left_path");
    cfg.embedding_right_path = opt_string(e, "right_path");
  }
  if (j.contains("blocking_k")) cfg.blocking_k = j["blocking_k"].get<int>();
  if (j.contains("positive_labels") && j["positive_labels"].contains("theta"))
    cfg.positive_labels.theta = j["positive_labels"]["theta"].get<double>();
  if (j.contains("negative_labels")) {
    const auto& s = j["negative_labels"];
    if (s.contains("epsilon")) cfg.negative_labels.epsilon = s["epsilon"].get<int>();
    if (s.contains("skip_top")) cfg.negative_labels.skip_top = s["skip_top"].get<int>();
  }
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    if (g.contains("dim")) cfg.graph.dim = g["dim"].get<int>();
    if (g.contains("layers")) cfg.graph.layers = g["layers"].get<int>();
    if (g.contains("gamma")) cfg.graph.gamma = g["gamma"].get<double>();
    if (g.contains("epochs")) cfg.graph.epochs = g["epochs"].get<int>();
    if (g.contains("learning_rate")) cfg.graph.learning_rate = g["learning_rate"].get<double>();
    if (g.contains("negatives_per_positive"))
      cfg.graph.negatives_per_positive = g["negatives_per_positive"].get<int>();
  }
  if (j.contains("collab")) {
    const auto& c = j["collab"];
    if (c.contains("lambda")) cfg.collab.lambda = c["lambda"].get<double>();
    if (c.contains("mu")) cfg.collab.mu = c["mu"].get<double>();
    if (c.contains("epochs")) cfg.collab.epochs = c["epochs"].get<int>();
    if (c.contains("learning_rate")) cfg.collab.learning_rate = c["learning_rate"].get<double>();
    if (c.contains("decision_threshold")) cfg.collab.decision_threshold = c["decision_threshold"].get<double>();
    if (c.contains("use_graph_features")) cfg.collab.use_graph_features = c["use_graph_features"].get<bool>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("anomaly")) {
    const auto& a = j["anomaly"];
    if (a.contains("jaccard_threshold")) cfg.anomaly.jaccard_threshold = a["jaccard_threshold"].get<double>();
    if (a.contains("mapping") && !a["mapping"].is_null()) {
      std::vector<std::pair<std::string, std::string>> mapping;
      for (const auto& entry : a["mapping"]) {
        if (!entry.is_array() || entry.size() != 2)
          throw std::runtime_error("config: anomaly.mapping entries must be [left, right] pairs");
        mapping.emplace_back(entry[0].get<std::string>(), entry[1].get<std::string>());
      }
      cfg.anomaly.mapping = std::move(mapping);
    }
  }

  if (cfg.embedding.dimension <= 0) throw std::runtime_error("config: embedding.dimension must be > 0");
  if (cfg.blocking_k < 1) throw std::runtime_error("config: blocking_k must be >= 1");
  if (cfg.positive_labels.theta < 0.0) throw std::runtime_error("config: positive_labels.theta must be >= 0");
  if (cfg.negative_labels.epsilon < 1) throw std::runtime_error("config: negative_labels.epsilon must be >= 1");
  if (cfg.negative_labels.skip_top < 0) throw std::runtime_error("config: negative_labels.skip_top must be >= 0");
  if (cfg.graph.gamma < 0.0) throw std::runtime_error("config: graph.gamma must be >= 0");
  if (cfg.collab.lambda < -1.0 || cfg.collab.lambda > 1.0)
    throw std::runtime_error("config: collab.lambda must be in [-1,1]");
  if (cfg.collab.mu < 0.0 || cfg.collab.mu > 1.0) throw std::runtime_error("config: collab.mu must be in [0,1]");
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  const auto opt = [](const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json j{
      {"left_csv", cfg.left_csv},
      {"right_csv", cfg.right_csv},
      {"left_id_column", opt(cfg.left_id_column)},
      {"right_id_column", opt(cfg.right_id_column)},
      {"ground_truth", opt(cfg.ground_truth)},
      {"labels_file", opt(cfg.labels_file)},
      {"embedding",
       {{"kind", cfg.embedding.kind},
        {"dimension", cfg.embedding.dimension},
        {"ngram_sizes", cfg.embedding.ngram_sizes},
        {"left_path", opt(cfg.embedding_left_path)},
        {"right_path", opt(cfg.embedding_right_path)}}},
      {"blocking_k", cfg.blocking_k},
      {"positive_labels", {{"theta", cfg.positive_labels.theta}}},
      {"negative_labels",
       {{"epsilon", cfg.negative_labels.epsilon}, {"skip_top", cfg.negative_labels.skip_top}}},
      {"graph",
       {{"dim", cfg.graph.dim},
        {"layers", cfg.graph.layers},
        {"gamma", cfg.graph.gamma},
        {"epochs", cfg.graph.epochs},
        {"learning_rate", cfg.graph.learning_rate},
        {"negatives_per_positive", cfg.graph.negatives_per_positive}}},
      {"collab",
       {{"lambda", cfg.collab.lambda},
        {"mu", cfg.collab.mu},
        {"epochs", cfg.collab.epochs},
        {"learning_rate", cfg.collab.learning_rate},
        {"decision_threshold", cfg.collab.decision_threshold},
        {"use_graph_features", cfg.collab.use_graph_features}}},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"out_dir", cfg.out_dir},
      {"anomaly",
       {{"jaccard_threshold", cfg.anomaly.jaccard_threshold},
        {"mapping", cfg.anomaly.mapping
                        ? json(*cfg.anomaly.mapping)
                        : json(nullptr)}}},
  };
  return j.dump(2);
}

std::string config_hash(const PipelineConfig& cfg) {
  // out_dir and threads cannot change any result, so they stay out of the
  // hash; identical configurations in different directories compare equal
  PipelineConfig canon = cfg;
  canon.out_dir.clear();
  canon.threads = 0;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(canon))));
  return buf;
}

std::string artifact_path(const PipelineConfig& cfg, const char* name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

void run_ingest(const PipelineConfig& cfg) {
  const Dataset left = load_side(cfg, true);
  const Dataset right = load_side(cfg, false);
  if (left.size() == 0 || right.size() == 0) throw std::runtime_error("datasets must be nonempty");
  ensure_out_dir(cfg);
  json j{{"config_hash", config_hash(cfg)},
         {"left", {{"path", cfg.left_csv}, {"tuples", left.size()}, {"attributes", left.attributes}}},
         {"right", {{"path", cfg.right_csv}, {"tuples", right.size()}, {"attributes", right.attributes}}}};
  atomic_write_text(artifact_path(cfg, artifact::datasets), j.dump(2) + "\n");
}

void run_embed(const PipelineConfig& cfg) {
  const Dataset left = load_side(cfg, true);
  const Dataset right = load_side(cfg, false);
  if (left.size() == 0 || right.size() == 0) throw std::runtime_error("datasets must be nonempty");
  const auto provider_l = sentence_provider(cfg, true);
  const auto provider_r = sentence_provider(cfg, false);
  const Eigen::MatrixXd el = embed_dataset(*provider_l, left, cfg.threads);
  const Eigen::MatrixXd er = embed_dataset(*provider_r, right, cfg.threads);

  ensure_out_dir(cfg);
  SimilarityMatrix m;
  m.scores = cosine_matrix(el, er).cwiseMax(0.0).cwiseMin(1.0);
  for (const auto& t : left.tuples) m.left_ids.push_back(t.id);
  for (const auto& t : right.tuples) m.right_ids.push_back(t.id);

  write_embedding_file(artifact_path(cfg, artifact::embeddings_left), m.left_ids, el);
  write_embedding_file(artifact_path(cfg, artifact::embeddings_right), m.right_ids, er);
  write_similarity_file(artifact_path(cfg, artifact::similarity), m, config_hash(cfg));
}

void run_block(const PipelineConfig& cfg) {
  auto [m, hash] = read_similarity_file(artifact_path(cfg, artifact::similarity));
  const CandidateSet cs = block_topk(m.scores, cfg.blocking_k);
  std::vector<IdPair> pairs;
  pairs.reserve(cs.pairs.size());
  for (const auto& [i, j] : cs.pairs)
    pairs.emplace_back(m.left_ids[static_cast<std::size_t>(i)], m.right_ids[static_cast<std::size_t>(j)]);
  write_candidates_tsv(artifact_path(cfg, artifact::candidates), pairs, config_hash(cfg));
}

void run_label(const PipelineConfig& cfg) {
  if (cfg.labels_file) {
    // supervised mode: normalize externally supplied labels into the artifact
    auto [labels, hash] = read_labels_tsv(*cfg.labels_file);
    (void)hash; // external files need no config hash
    write_labels_tsv(artifact_path(cfg, artifact::labels), labels, config_hash(cfg));
    return;
  }
  auto [m, hash] = read_similarity_file(artifact_path(cfg, artifact::similarity));
  const auto [lids, el] = read_embedding_file(artifact_path(cfg, artifact::embeddings_left));
  const auto [rids, er] = read_embedding_file(artifact_path(cfg, artifact::embeddings_right));
  if (lids != m.left_ids || rids != m.right_ids)
    throw std::runtime_error("embedding files and similarity matrix disagree on tuple ids");

  const PositiveLabels positives = generate_positives(m.scores, cfg.positive_labels);
  const NegativeLabels negatives =
      generate_negatives(cosine_matrix(el, el), cosine_matrix(er, er), positives, cfg.negative_labels);

  LabeledIdPairs out;
  for (const auto& p : positives.pairs)
    out.positives.emplace_back(m.left_ids[static_cast<std::size_t>(p.left)],
                               m.right_ids[static_cast<std::size_t>(p.right)]);
  for (const auto& n : negatives.pairs)
    out.negatives.emplace_back(m.left_ids[static_cast<std::size_t>(n.left)],
                               m.right_ids[static_cast<std::size_t>(n.right)]);
  write_labels_tsv(artifact_path(cfg, artifact::labels), out, config_hash(cfg));
}

void run_graph(const PipelineConfig& cfg) {
  const Dataset left = load_side(cfg, true);
  const Dataset right = load_side(cfg, false);
  const MultiRelGraph gl = build_graph(left);
  const MultiRelGraph gr = build_graph(right);
  ensure_out_dir(cfg);
  const std::string hash = config_hash(cfg);
  write_graph_files(artifact_path(cfg, artifact::graph_left_nodes),
                    artifact_path(cfg, artifact::graph_left_edges), gl, hash);
  write_graph_files(artifact_path(cfg, artifact::graph_right_nodes),
                    artifact_path(cfg, artifact::graph_right_edges), gr, hash);
  json j{{"config_hash", hash},
         {"left", stats_to_json(graph_stats(gl))},
         {"right", stats_to_json(graph_stats(gr))},
         {"reference",
          {{"left",
            {{"embdi", stats_to_json(reference_graph(left, ReferenceStyle::embdi))},
             {"grapher", stats_to_json(reference_graph(left, ReferenceStyle::grapher))}}},
           {"right",
            {{"embdi", stats_to_json(reference_graph(right, ReferenceStyle::embdi))},
             {"grapher", stats_to_json(reference_graph(right, ReferenceStyle::grapher))}}}}}};
  atomic_write_text(artifact_path(cfg, artifact::graph_stats), j.dump(2) + "\n");
}

void run_train_graph(const PipelineConfig& cfg) {
  const Dataset left = load_side(cfg, true);
  const Dataset right = load_side(cfg, false);
  const auto labels = load_labels_indexed(artifact_path(cfg, artifact::labels), index_by_id(left),
                                          index_by_id(right), config_hash(cfg), true);
  const MultiRelGraph gl = build_graph(left);
  const MultiRelGraph gr = build_graph(right);
  const HashedNgramProvider value_provider(cfg.graph.dim, derive_seed(cfg, "value-embed"),
                                           cfg.embedding.ngram_sizes);
  GraphTrainConfig gcfg = cfg.graph;
  gcfg.seed = derive_seed(cfg, "graph");
  const GraphTrainResult result =
      train_graph(gl, gr, init_node_embeddings(gl, value_provider),
                  init_node_embeddings(gr, value_provider), labels.positives, labels.negatives, gcfg);

  GraphCheckpoint ck;
  ck.params = result.params;
  ck.left_ids = gl.tuple_ids;
  ck.right_ids = gr.tuple_ids;
  ck.left_embeddings = result.left_embeddings;
  ck.right_embeddings = result.right_embeddings;
  write_graph_checkpoint(artifact_path(cfg, artifact::graph_checkpoint), ck, config_hash(cfg));
  write_loss_trace_csv(artifact_path(cfg, artifact::graph_loss), result.loss_trace, config_hash(cfg));
}

void run_train_collab(const PipelineConfig& cfg) {
  const auto [lids, el] = read_embedding_file(artifact_path(cfg, artifact::embeddings_left));
  const auto [rids, er] = read_embedding_file(artifact_path(cfg, artifact::embeddings_right));
  auto [ck, ck_hash] = read_graph_checkpoint(artifact_path(cfg, artifact::graph_checkpoint));
  require_hash(ck_hash, config_hash(cfg), artifact_path(cfg, artifact::graph_checkpoint), true);

  // align graph embeddings with the sentence embedding row order
  const auto ck_left = index_by_id(ck.left_ids);
  const auto ck_right = index_by_id(ck.right_ids);
  Eigen::MatrixXd gl(el.rows(), ck.left_embeddings.cols());
  for (std::size_t i = 0; i < lids.size(); ++i)
    gl.row(static_cast<Eigen::Index>(i)) = ck.left_embeddings.row(lookup(ck_left, lids[i], "checkpoint"));
  Eigen::MatrixXd gr(er.rows(), ck.right_embeddings.cols());
  for (std::size_t i = 0; i < rids.size(); ++i)
    gr.row(static_cast<Eigen::Index>(i)) = ck.right_embeddings.row(lookup(ck_right, rids[i], "checkpoint"));

  const auto labels = load_labels_indexed(artifact_path(cfg, artifact::labels), index_by_id(lids),
                                          index_by_id(rids), config_hash(cfg), true);
  CollabConfig ccfg = cfg.collab;
  ccfg.seed = derive_seed(cfg, "collab");
  const CollabTrainResult result =
      train_collab(el, er, gl, gr, labels.positives, labels.negatives, ccfg);
  write_collab_model(artifact_path(cfg, artifact::collab_model), result.params, config_hash(cfg));
  write_loss_trace_csv(artifact_path(cfg, artifact::collab_loss), result.loss_trace, config_hash(cfg));
}

void run_predict(const PipelineConfig& cfg) {
  const auto [lids, el] = read_embedding_file(artifact_path(cfg, artifact::embeddings_left));
  const auto [rids, er] = read_embedding_file(artifact_path(cfg, artifact::embeddings_right));
  auto [ck, ck_hash] = read_graph_checkpoint(artifact_path(cfg, artifact::graph_checkpoint));
  auto [model, model_hash] = read_collab_model(artifact_path(cfg, artifact::collab_model));
  auto [cand_ids, cand_hash] = read_candidates_tsv(artifact_path(cfg, artifact::candidates));

  const auto left_index = index_by_id(lids);
  const auto right_index = index_by_id(rids);
  const auto ck_left = index_by_id(ck.left_ids);
  const auto ck_right = index_by_id(ck.right_ids);
  Eigen::MatrixXd gl(el.rows(), ck.left_embeddings.cols());
  for (std::size_t i = 0; i < lids.size(); ++i)
    gl.row(static_cast<Eigen::Index>(i)) = ck.left_embeddings.row(lookup(ck_left, lids[i], "checkpoint"));
  Eigen::MatrixXd gr(er.rows(), ck.right_embeddings.cols());
  for (std::size_t i = 0; i < rids.size(); ++i)
    gr.row(static_cast<Eigen::Index>(i)) = ck.right_embeddings.row(lookup(ck_right, rids[i], "checkpoint"));

  CandidateSet cs;
  cs.k = cfg.blocking_k;
  cs.pairs.reserve(cand_ids.size());
  for (const auto& [l, r] : cand_ids)
    cs.pairs.emplace_back(lookup(left_index, l, "candidates"), lookup(right_index, r, "candidates"));

  CollabConfig ccfg = cfg.collab;
  const auto preds = predict(model, cs, el, er, gl, gr, ccfg);
  std::vector<PredictionRow> rows;
  rows.reserve(preds.size());
  for (const auto& p : preds)
    rows.push_back({lids[static_cast<std::size_t>(p.left)], rids[static_cast<std::size_t>(p.right)],
                    p.probability, p.label});
  write_predictions_tsv(artifact_path(cfg, artifact::predictions), rows, config_hash(cfg));
}

void run_eval(const PipelineConfig& cfg, bool force) {
  if (!cfg.ground_truth) {
    ensure_out_dir(cfg);
    json j{{"config_hash", config_hash(cfg)}, {"skipped", "no ground_truth configured"}};
    atomic_write_text(artifact_path(cfg, artifact::metrics), j.dump(2) + "\n");
    return;
  }
  const GroundTruth truth = read_truth_tsv(*cfg.ground_truth);
  const std::string expected = config_hash(cfg);

  auto [pred_rows, pred_hash] = read_predictions_tsv(artifact_path(cfg, artifact::predictions));
  require_hash(pred_hash, expected, artifact_path(cfg, artifact::predictions), force);
  auto [cand_ids, cand_hash] = read_candidates_tsv(artifact_path(cfg, artifact::candidates));
  require_hash(cand_hash, expected, artifact_path(cfg, artifact::candidates), force);
  auto [labels, labels_hash] = read_labels_tsv(artifact_path(cfg, artifact::labels));
  require_hash(labels_hash, expected, artifact_path(cfg, artifact::labels), force);

  IdPairSet predicted;
  for (const auto& r : pred_rows)
    if (r.label == 1) predicted.emplace(r.left_id, r.right_id);
  IdPairSet universe(cand_ids.begin(), cand_ids.end());

  // the split shuffles candidate positions; map back to id pairs
  CandidateSet positions;
  positions.pairs.reserve(cand_ids.size());
  for (std::size_t i = 0; i < cand_ids.size(); ++i)
    positions.pairs.emplace_back(static_cast<int>(i), static_cast<int>(i));
  const CandidateSplit split = split_candidates(positions, derive_seed(cfg, "split"));
  const auto to_ids = [&](const std::vector<std::pair<int, int>>& part) {
    IdPairSet s;
    for (const auto& [i, _] : part) s.insert(cand_ids[static_cast<std::size_t>(i)]);
    return s;
  };
  const IdPairSet test_universe = to_ids(split.test);

  IdPairSet pred_test, truth_test;
  for (const auto& p : predicted)
    if (test_universe.count(p)) pred_test.insert(p);
  GroundTruth truth_on_test;
  for (const auto& t : truth.matches)
    if (test_universe.count(t)) truth_on_test.matches.insert(t);

  const MetricsReport all = score_predictions(predicted, truth, universe);
  const MetricsReport test = score_predictions(pred_test, truth_on_test, test_universe);
  const LabelQualityReport lq =
      score_labels(IdPairSet(labels.positives.begin(), labels.positives.end()),
                   IdPairSet(labels.negatives.begin(), labels.negatives.end()), truth);

  json j{{"config_hash", expected},
         {"all", metrics_to_json(all)},
         {"test", metrics_to_json(test)},
         {"label_quality",
          {{"tp", lq.tp},
           {"fn", lq.fn},
           {"tpr", lq.tpr},
           {"tpr_defined", lq.tpr_defined},
           {"tn", lq.tn},
           {"fp", lq.fp},
           {"tnr", lq.tnr},
           {"tnr_defined", lq.tnr_defined}}},
         {"split_sizes",
          {{"train", split.train.size()},
           {"validation", split.validation.size()},
           {"test", split.test.size()}}}};
  atomic_write_text(artifact_path(cfg, artifact::metrics), j.dump(2) + "\n");
}

void run_anomaly(const PipelineConfig& cfg) {
  const Dataset left = load_side(cfg, true);
  const Dataset right = load_side(cfg, false);
  auto [pred_rows, hash] = read_predictions_tsv(artifact_path(cfg, artifact::predictions));

  std::vector<std::pair<std::string, std::string>> matches;
  for (const auto& r : pred_rows)
    if (r.label == 1) matches.emplace_back(r.left_id, r.right_id);

  AttributeMapping mapping;
  if (cfg.anomaly.mapping)
    mapping.pairs = *cfg.anomaly.mapping;
  else
    mapping = auto_mapping(left, right);

  const auto records =
      detect_anomalies(left, right, matches, mapping, cfg.anomaly.jaccard_threshold);
  write_anomalies_jsonl(artifact_path(cfg, artifact::anomalies), records, config_hash(cfg));

  if (records.empty()) {
    std::cout << "no anomalies among " << matches.size() << " matched pairs\n";
    return;
  }
  std::cout << "left_id\tright_id\tattribute\tleft_value\tright_value\tkind\n";
  for (const auto& r : records) {
    const bool contra = r.kind == AnomalyKind::contradiction;
    const auto mark = [&](const std::string& v) {
      if (v.empty()) return std::string("(missing)");
      return contra ? "!" + v + "!" : v;
    };
    std::cout << r.left_id << '\t' << r.right_id << '\t' << r.left_attribute << '\t'
              << mark(r.left_value) << '\t' << mark(r.right_value) << '\t'
              << (contra ? "contradiction" : "one-side-missing") << '\n';
  }
}

void run_all(const PipelineConfig& cfg, bool force_eval) {
  const std::pair<const char*, std::function<void()>> stages[] = {
      {"ingest", [&] { run_ingest(cfg); }},
      {"embed", [&] { run_embed(cfg); }},
      {"block", [&] { run_block(cfg); }},
      {"label", [&] { run_label(cfg); }},
      {"graph", [&] { run_graph(cfg); }},
      {"train-graph", [&] { run_train_graph(cfg); }},
      {"train-collab", [&] { run_train_collab(cfg); }},
      {"predict", [&] { run_predict(cfg); }},
      {"eval", [&] { run_eval(cfg, force_eval); }},
      {"anomaly", [&] { run_anomaly(cfg); }},
  };
  for (const auto& [name, fn] : stages) {
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  }
}

} // namespace ermatch
