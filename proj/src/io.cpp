#include "ermatch/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ermatch {

namespace {

constexpr const char* kHashPrefix = "# config_hash=";

std::string hash_line(const std::string& config_hash) {
  return std::string(kHashPrefix) + config_hash + "\n";
}

/// Reads the whole file; returns (lines after the hash header, embedded hash).
std::pair<std::vector<std::string>, std::string> read_lines_with_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open artifact: " + path);
  std::vector<std::string> lines;
  std::string line, hash;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.rfind(kHashPrefix, 0) == 0) {
      hash = line.substr(std::string(kHashPrefix).size());
      first = false;
      continue;
    }
    first = false;
    lines.push_back(std::move(line));
  }
  return {std::move(lines), std::move(hash)};
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(context + ": bad float \"" + s + "\"");
  }
}

void append_matrix(std::ostringstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd parse_matrix(const std::vector<std::string>& lines, std::size_t& cursor,
                             Eigen::Index rows, Eigen::Index cols, const std::string& context) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (cursor >= lines.size()) throw std::runtime_error(context + ": truncated matrix");
    std::istringstream ls(lines[cursor++]);
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(ls >> m(i, j))) throw std::runtime_error(context + ": short matrix row");
  }
  return m;
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out.good()) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move " + tmp + " into place");
}

void write_candidates_tsv(const std::string& path, const std::vector<IdPair>& pairs,
                          const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash);
  for (const auto& [l, r] : pairs) out << l << '\t' << r << '\n';
  atomic_write_text(path, out.str());
}

std::pair<std::vector<IdPair>, std::string> read_candidates_tsv(const std::string& path) {
  auto [lines, hash] = read_lines_with_hash(path);
  std::vector<IdPair> pairs;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != 2) throw std::runtime_error(path + ": expected 2 tab-separated fields");
    pairs.emplace_back(cells[0], cells[1]);
  }
  return {std::move(pairs), std::move(hash)};
}

void write_labels_tsv(const std::string& path, const LabeledIdPairs& labels,
                      const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash);
  for (const auto& [l, r] : labels.positives) out << l << '\t' << r << "\t1\n";
  for (const auto& [l, r] : labels.negatives) out << l << '\t' << r << "\t0\n";
  atomic_write_text(path, out.str());
}

std::pair<LabeledIdPairs, std::string> read_labels_tsv(const std::string& path) {
  auto [lines, hash] = read_lines_with_hash(path);
  LabeledIdPairs labels;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != 3 || (cells[2] != "0" && cells[2] != "1"))
      throw std::runtime_error(path + ": expected \"left<TAB>right<TAB>0|1\"");
    if (cells[2] == "1")
      labels.positives.emplace_back(cells[0], cells[1]);
    else
      labels.negatives.emplace_back(cells[0], cells[1]);
  }
  return {std::move(labels), std::move(hash)};
}

void write_predictions_tsv(const std::string& path, const std::vector<PredictionRow>& rows,
                           const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash);
  for (const auto& r : rows)
    out << r.left_id << '\t' << r.right_id << '\t' << format_double(r.probability) << '\t'
        << r.label << '\n';
  atomic_write_text(path, out.str());
}

std::pair<std::vector<PredictionRow>, std::string> read_predictions_tsv(const std::string& path) {
  auto [lines, hash] = read_lines_with_hash(path);
  std::vector<PredictionRow> rows;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != 4) throw std::runtime_error(path + ": expected 4 tab-separated fields");
    PredictionRow r;
    r.left_id = cells[0];
    r.right_id = cells[1];
    r.probability = parse_double(cells[2], path);
    if (cells[3] != "0" && cells[3] != "1") throw std::runtime_error(path + ": label must be 0 or 1");
    r.label = cells[3] == "1" ? 1 : 0;
    rows.push_back(std::move(r));
  }
  return {std::move(rows), std::move(hash)};
}

GroundTruth read_truth_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground truth: " + path);
  GroundTruth t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_tabs(line);
    if (cells.size() != 2) throw std::runtime_error(path + ": expected \"left<TAB>right\"");
    t.matches.emplace(cells[0], cells[1]);
  }
  return t;
}

void write_truth_tsv(const std::string& path, const std::vector<IdPair>& pairs) {
  std::ostringstream out;
  for (const auto& [l, r] : pairs) out << l << '\t' << r << '\n';
  atomic_write_text(path, out.str());
}

void write_similarity_file(const std::string& path, const SimilarityMatrix& m,
                           const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash) << "similarity v1\n" << m.rows() << ' ' << m.cols() << '\n';
  for (const auto& id : m.left_ids) out << id << '\n';
  for (const auto& id : m.right_ids) out << id << '\n';
  append_matrix(out, m.scores);
  atomic_write_text(path, out.str());
}

std::pair<SimilarityMatrix, std::string> read_similarity_file(const std::string& path) {
  auto [lines, hash] = read_lines_with_hash(path);
  std::size_t cursor = 0;
  if (cursor >= lines.size() || lines[cursor] != "similarity v1")
    throw std::runtime_error(path + ": not a similarity file");
  ++cursor;
  Eigen::Index rows = 0, cols = 0;
  {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": missing dimensions");
    std::istringstream ls(lines[cursor++]);
    if (!(ls >> rows >> cols) || rows < 0 || cols < 0)
      throw std::runtime_error(path + ": bad dimensions");
  }
  SimilarityMatrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": truncated id list");
    m.left_ids.push_back(lines[cursor++]);
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": truncated id list");
    m.right_ids.push_back(lines[cursor++]);
  }
  m.scores = parse_matrix(lines, cursor, rows, cols, path);
  return {std::move(m), std::move(hash)};
}

void write_graph_files(const std::string& nodes_path, const std::string& edges_path,
                       const MultiRelGraph& g, const std::string& config_hash) {
  std::ostringstream nodes;
  nodes << hash_line(config_hash);
  for (int t = 0; t < g.tuple_count; ++t)
    nodes << t << "\ttuple\t" << g.tuple_ids[static_cast<std::size_t>(t)] << '\n';
  for (std::size_t v = 0; v < g.value_texts.size(); ++v)
    nodes << (g.tuple_count + static_cast<int>(v)) << "\tvalue\t" << g.value_texts[v] << '\n';
  atomic_write_text(nodes_path, nodes.str());

  std::ostringstream edges;
  edges << hash_line(config_hash);
  for (const auto& e : g.edges)
    edges << g.tuple_ids[static_cast<std::size_t>(e.tuple)] << '\t'
          << g.relations[static_cast<std::size_t>(e.relation)] << '\t'
          << g.value_texts[static_cast<std::size_t>(e.value)] << '\n';
  atomic_write_text(edges_path, edges.str());
}

void write_graph_checkpoint(const std::string& path, const GraphCheckpoint& ck,
                            const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash) << "gnn-checkpoint v1\n";
  out << ck.params.dim() << ' ' << ck.params.layers() << ' ' << ck.params.relation_names.size()
      << '\n';
  for (const auto& name : ck.params.relation_names) out << name << '\n';
  append_matrix(out, ck.params.relation_vectors);
  for (const auto& w : ck.params.transforms) append_matrix(out, w);
  out << ck.left_ids.size() << '\n';
  for (std::size_t i = 0; i < ck.left_ids.size(); ++i) {
    out << ck.left_ids[i];
    for (Eigen::Index j = 0; j < ck.left_embeddings.cols(); ++j)
      out << ' ' << format_double(ck.left_embeddings(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  out << ck.right_ids.size() << '\n';
  for (std::size_t i = 0; i < ck.right_ids.size(); ++i) {
    out << ck.right_ids[i];
    for (Eigen::Index j = 0; j < ck.right_embeddings.cols(); ++j)
      out << ' ' << format_double(ck.right_embeddings(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

std::pair<GraphCheckpoint, std::string> read_graph_checkpoint(const std::string& path) {
  auto [lines, hash] = read_lines_with_hash(path);
  std::size_t cursor = 0;
  if (cursor >= lines.size() || lines[cursor] != "gnn-checkpoint v1")
    throw std::runtime_error(path + ": not a checkpoint file");
  ++cursor;
  int dim = 0, layers = 0;
  std::size_t relations = 0;
  {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": missing header");
    std::istringstream ls(lines[cursor++]);
    if (!(ls >> dim >> layers >> relations) || dim <= 0 || layers < 1)
      throw std::runtime_error(path + ": bad checkpoint header");
  }
  GraphCheckpoint ck;
  for (std::size_t i = 0; i < relations; ++i) {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": truncated relation names");
    ck.params.relation_names.push_back(lines[cursor++]);
  }
  ck.params.relation_vectors =
      parse_matrix(lines, cursor, static_cast<Eigen::Index>(relations), dim, path);
  for (int l = 0; l < layers; ++l)
    ck.params.transforms.push_back(parse_matrix(lines, cursor, dim, dim, path));

  const auto read_block = [&](std::vector<std::string>& ids, Eigen::MatrixXd& rows) {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": truncated embedding block");
    const std::size_t count = static_cast<std::size_t>(std::stoull(lines[cursor++]));
    rows.resize(static_cast<Eigen::Index>(count), dim);
    for (std::size_t i = 0; i < count; ++i) {
      if (cursor >= lines.size()) throw std::runtime_error(path + ": truncated embedding block");
      std::istringstream ls(lines[cursor++]);
      std::string id;
      if (!(ls >> id)) throw std::runtime_error(path + ": blank embedding row");
      for (int j = 0; j < dim; ++j)
        if (!(ls >> rows(static_cast<Eigen::Index>(i), j)))
          throw std::runtime_error(path + ": short embedding row for \"" + id + "\"");
      ids.push_back(std::move(id));
    }
  };
  read_block(ck.left_ids, ck.left_embeddings);
  read_block(ck.right_ids, ck.right_embeddings);
  return {std::move(ck), std::move(hash)};
}

void write_collab_model(const std::string& path, const CollabParams& params,
                        const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash) << "collab-model v1\n";
  out << params.projection.rows() << ' ' << params.classifier.rows() << '\n';
  append_matrix(out, params.projection);
  append_matrix(out, params.classifier);
  atomic_write_text(path, out.str());
}

std::pair<CollabParams, std::string> read_collab_model(const std::string& path) {
  auto [lines, hash] = read_lines_with_hash(path);
  std::size_t cursor = 0;
  if (cursor >= lines.size() || lines[cursor] != "collab-model v1")
    throw std::runtime_error(path + ": not a collab model file");
  ++cursor;
  Eigen::Index n = 0, feat = 0;
  {
    if (cursor >= lines.size()) throw std::runtime_error(path + ": missing dims");
    std::istringstream ls(lines[cursor++]);
    if (!(ls >> n >> feat) || n <= 0 || feat < 2 * n)
      throw std::runtime_error(path + ": bad model dims");
  }
  CollabParams p;
  p.projection = parse_matrix(lines, cursor, n, n, path);
  p.classifier = parse_matrix(lines, cursor, feat, 2, path);
  return {std::move(p), std::move(hash)};
}

void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace,
                          const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash) << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << format_double(trace[i]) << '\n';
  atomic_write_text(path, out.str());
}

void write_anomalies_jsonl(const std::string& path, const std::vector<AnomalyRecord>& records,
                           const std::string& config_hash) {
  std::ostringstream out;
  out << hash_line(config_hash);
  for (const auto& r : records) {
    nlohmann::json j{{"left_id", r.left_id},
                     {"right_id", r.right_id},
                     {"left_attribute", r.left_attribute},
                     {"right_attribute", r.right_attribute},
                     {"left_value", r.left_value},
                     {"right_value", r.right_value},
                     {"kind", r.kind == AnomalyKind::contradiction ? "contradiction" : "one-side-missing"}};
    out << j.dump() << '\n';
  }
  atomic_write_text(path, out.str());
}

} // namespace ermatch
