#include "ermatch/embedding.hpp"

#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "ermatch/io.hpp"
#include "ermatch/text.hpp"

namespace ermatch {

Eigen::VectorXd EmbeddingProvider::embed_tuple(const Dataset& d, const Tuple& e) const {
  return embed_text(serialize_tuple(d, e));
}

HashedNgramProvider::HashedNgramProvider(int dimension, std::uint64_t seed,
                                         std::vector<int> ngram_sizes)
    : dim_(dimension), seed_(seed), ngram_sizes_(std::move(ngram_sizes)) {
  if (dim_ <= 0) throw std::invalid_argument("embedding dimension must be positive");
  if (ngram_sizes_.empty()) throw std::invalid_argument("at least one n-gram size required");
}

namespace {
// Serialization scaffolding is identical across tuples; letting it into the
// feature mass compresses every cosine toward 1 and starves the top-1/top-2
// margins downstream.
bool is_marker_token(const std::string& t) {
  return t == "[col]" || t == "[val]" || t == "[sep]" || t == "[cls]";
}
} // namespace

Eigen::VectorXd HashedNgramProvider::embed_text(const std::string& text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  if (text.empty()) return v;
  const auto bucket = [&](std::uint64_t h) { return static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_)); };
  bool any = false;
  for (const std::string& token : split_tokens(ascii_lower(text))) {
    if (is_marker_token(token)) continue;
    bool token_any = false;
    for (const int n : ngram_sizes_) {
      if (static_cast<std::size_t>(n) > token.size()) continue;
      // per-size salt keeps equal substrings of different lengths apart
      const std::uint64_t salt = fnv1a64(std::string(1, static_cast<char>(n)), seed_);
      for (std::size_t i = 0; i + n <= token.size(); ++i) {
        v[bucket(fnv1a64({token.data() + i, static_cast<std::size_t>(n)}, salt))] += 1.0;
        token_any = true;
      }
    }
    if (!token_any) v[bucket(fnv1a64(token, seed_ ^ 0x517cc1b727220a95ull))] += 1.0;
    any = true;
  }
  if (!any) {
    // nothing but markers (or whitespace): one whole-text feature, so
    // nonempty text never embeds to zero
    v[bucket(fnv1a64(ascii_lower(text), seed_))] = 1.0;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path) {
  auto [ids, vectors] = read_embedding_file(path);
  ids_ = std::move(ids);
  vectors_ = std::move(vectors);
  dim_ = static_cast<int>(vectors_.cols());
}

std::size_t FileEmbeddingProvider::row_of(const std::string& key) const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == key) return i;
  throw std::runtime_error("embedding file has no entry for id \"" + key + "\"");
}

Eigen::VectorXd FileEmbeddingProvider::embed_text(const std::string& key) const {
  return vectors_.row(static_cast<Eigen::Index>(row_of(key))).transpose();
}

Eigen::VectorXd FileEmbeddingProvider::embed_tuple(const Dataset&, const Tuple& e) const {
  return embed_text(e.id);
}

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec) {
  if (spec.kind == "hashed-ngram")
    return std::make_unique<HashedNgramProvider>(spec.dimension, spec.seed, spec.ngram_sizes);
  if (spec.kind == "file") {
    if (spec.path.empty()) throw std::invalid_argument("file embedding provider needs a path");
    return std::make_unique<FileEmbeddingProvider>(spec.path);
  }
  throw std::invalid_argument("unknown embedding provider kind: " + spec.kind);
}

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

Eigen::MatrixXd embed_dataset(const EmbeddingProvider& provider, const Dataset& d, int threads) {
  Eigen::MatrixXd rows(d.size(), provider.dimension());
  const auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      rows.row(static_cast<Eigen::Index>(i)) = provider.embed_tuple(d, d.tuples[i]).transpose();
  };
  const std::size_t n = d.size();
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  if (workers <= 1 || n < 64) {
    fill(0, n);
    return rows;
  }
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    if (b >= n) break;
    pool.emplace_back(fill, b, std::min(n, b + chunk));
  }
  for (auto& t : pool) t.join();
  return rows;
}

Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
  if (left.cols() != right.cols())
    throw std::invalid_argument("cosine_matrix: dimension mismatch");
  return l2_normalize_rows(left) * l2_normalize_rows(right).transpose();
}

SimilarityMatrix build_similarity_matrix(const EmbeddingProvider& provider, const Dataset& left,
                                         const Dataset& right, int threads) {
  if (left.size() == 0 || right.size() == 0)
    throw std::invalid_argument("build_similarity_matrix: empty dataset");
  SimilarityMatrix m;
  const Eigen::MatrixXd el = embed_dataset(provider, left, threads);
  const Eigen::MatrixXd er = embed_dataset(provider, right, threads);
  m.scores = cosine_matrix(el, er).cwiseMax(0.0).cwiseMin(1.0);
  m.left_ids.reserve(left.size());
  for (const auto& t : left.tuples) m.left_ids.push_back(t.id);
  m.right_ids.reserve(right.size());
  for (const auto& t : right.tuples) m.right_ids.push_back(t.id);
  return m;
}

void write_embedding_file(const std::string& path, const std::vector<std::string>& ids,
                          const Eigen::MatrixXd& rows) {
  if (static_cast<Eigen::Index>(ids.size()) != rows.rows())
    throw std::invalid_argument("write_embedding_file: id/row count mismatch");
  std::ostringstream out;
  out << ids.size() << ' ' << rows.cols() << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << ' ' << format_double(rows(i, j));
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::size_t count = 0;
  int dim = 0;
  if (!(in >> count >> dim) || dim <= 0)
    throw std::runtime_error(path + ": bad embedding file header (want \"<count> <dimension>\")");
  in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  std::vector<std::string> ids;
  ids.reserve(count);
  Eigen::MatrixXd rows(count, dim);
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated embedding file (expected " +
                               std::to_string(count) + " vectors)");
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) throw std::runtime_error(path + ": blank embedding line " + std::to_string(i + 2));
    for (int j = 0; j < dim; ++j) {
      double v;
      if (!(ls >> v))
        throw std::runtime_error(path + ": line " + std::to_string(i + 2) + ": expected " +
                                 std::to_string(dim) + " floats for id \"" + id + "\"");
      rows(static_cast<Eigen::Index>(i), j) = v;
    }
    double extra;
    if (ls >> extra)
      throw std::runtime_error(path + ": line " + std::to_string(i + 2) + ": too many floats");
    ids.push_back(std::move(id));
  }
  return {std::move(ids), std::move(rows)};
}

} // namespace ermatch
