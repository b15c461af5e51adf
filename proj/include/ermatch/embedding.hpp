#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ermatch/dataset.hpp"

namespace ermatch {

struct EmbeddingProviderSpec {
  std::string kind = "hashed-ngram"; // or "file"
  int dimension = 256;
  std::uint64_t seed = 1;
  std::vector<int> ngram_sizes = {2, 3, 4};
  std::string path; // file kind: embedding file bound to one dataset
};

/// Produces fixed-dimension vectors for texts or tuples. Deterministic:
/// identical inputs yield identical vectors. Thread-safe once constructed.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dimension() const = 0;
  /// L2-normalized vector for `text`; zero vector for empty text.
  /// File-backed providers interpret `text` as a tuple id key.
  virtual Eigen::VectorXd embed_text(const std::string& text) const = 0;
  /// Vector for a tuple; defaults to embedding its serialized sentence.
  virtual Eigen::VectorXd embed_tuple(const Dataset& d, const Tuple& e) const;
};

/// Hashed character n-gram TF vectors over the lowercased tokens of the
/// text, seeded buckets, L2-normalized. Serialization marker tokens
/// ([COL]/[VAL]/[SEP]/[CLS]) carry no information and are skipped; tokens
/// shorter than every configured n-gram hash whole, so nonempty text never
/// maps to the zero vector.
class HashedNgramProvider final : public EmbeddingProvider {
 public:
  HashedNgramProvider(int dimension, std::uint64_t seed, std::vector<int> ngram_sizes = {2, 3, 4});
  int dimension() const override { return dim_; }
  Eigen::VectorXd embed_text(const std::string& text) const override;

 private:
  int dim_;
  std::uint64_t seed_;
  std::vector<int> ngram_sizes_;
};

/// Precomputed vectors keyed by tuple id, loaded from an embedding file.
/// Lookup of an unknown id throws.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::string& path);
  int dimension() const override { return dim_; }
  Eigen::VectorXd embed_text(const std::string& key) const override;
  Eigen::VectorXd embed_tuple(const Dataset& d, const Tuple& e) const override;

 private:
  int dim_ = 0;
  std::vector<std::string> ids_;
  Eigen::MatrixXd vectors_; // one row per id, file order
  std::size_t row_of(const std::string& key) const;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec);

/// Cosine of two vectors; 0 if either is zero. Throws on dimension mismatch.
template <typename DA, typename DB>
double cosine_similarity(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
  const double na = a.template cast<double>().norm();
  const double nb = b.template cast<double>().norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.template cast<double>().dot(b.template cast<double>()) / (na * nb);
}

/// Row-normalize: each nonzero row scaled to unit L2 norm, zero rows kept.
Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m);

/// One embedding row per tuple, dataset order.
Eigen::MatrixXd embed_dataset(const EmbeddingProvider& provider, const Dataset& d, int threads = 0);

/// Unclamped pairwise cosine matrix between two embedding row sets.
Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right);

/// Pairwise tuple similarity, cosines clamped to [0,1].
struct SimilarityMatrix {
  Eigen::MatrixXd scores; // |T| x |T'|
  std::vector<std::string> left_ids, right_ids;
  Eigen::Index rows() const { return scores.rows(); }
  Eigen::Index cols() const { return scores.cols(); }
};

SimilarityMatrix build_similarity_matrix(const EmbeddingProvider& provider, const Dataset& left,
                                         const Dataset& right, int threads = 0);

/// Embedding file: "<count> <dimension>" header then one "<id> <f1> ... <fdim>"
/// line per vector. Floats printed with round-trip precision.
void write_embedding_file(const std::string& path, const std::vector<std::string>& ids,
                          const Eigen::MatrixXd& rows);
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_embedding_file(const std::string& path);

} // namespace ermatch
