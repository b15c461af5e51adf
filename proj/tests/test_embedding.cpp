#include <doctest.h>

#include <filesystem>
#include <random>
#include <unistd.h>

#include "ermatch/embedding.hpp"
#include "oracles.hpp"

using namespace ermatch;

namespace {

Dataset tiny_dataset(const std::vector<std::vector<std::optional<std::string>>>& rows) {
  Dataset d;
  d.attributes = {"Title", "Brand"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Tuple t;
    t.id = std::to_string(i);
    t.values = rows[i];
    d.tuples.push_back(std::move(t));
  }
  return d;
}

std::string temp_path(const char* tag) {
  return (std::filesystem::temp_directory_path() /
          ("ermatch_emb_" + std::to_string(::getpid()) + "_" + tag + ".txt"))
      .string();
}

} // namespace

TEST_CASE("embedding determinism, empty text, normalization") {
  const HashedNgramProvider p(64, 3);
  CHECK(p.embed_text("abc") == p.embed_text("abc"));
  CHECK(p.embed_text("").isZero());
  CHECK(p.embed_text("aspyr media").norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.embed_text("x").norm() == doctest::Approx(1.0).epsilon(1e-9)); // shorter than any n-gram
}

TEST_CASE("serialization markers do not contribute features") {
  const HashedNgramProvider p(128, 3);
  CHECK(p.embed_text("[COL] Title [VAL] sims 2") == p.embed_text("Title sims 2"));
  CHECK_FALSE(p.embed_text("[CLS] [SEP]").isZero()); // marker-only text still nonzero
}

TEST_CASE("cosine similarity basics") {
  Eigen::VectorXd v(3);
  v << 0.3, -0.2, 0.9;
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::Vector2d e1(1, 0), e2(0, 1), ne1(-1, 0);
  CHECK(cosine_similarity(e1, e2) == 0.0);
  CHECK(cosine_similarity(e1, ne1) == doctest::Approx(-1.0).epsilon(1e-12));
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(cosine_similarity(e1, zero) == 0.0);
  Eigen::VectorXd wrong(3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(cosine_similarity(e1, wrong), std::invalid_argument);
}

TEST_CASE("cosine is symmetric exactly") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n;
  for (int round = 0; round < 100; ++round) {
    Eigen::VectorXd a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = n(gen);
      b[i] = n(gen);
    }
    CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
  }
}

TEST_CASE("similarity matrix: identical copy has unit diagonal, missing row zero") {
  const auto rows = std::vector<std::vector<std::optional<std::string>>>{
      {std::string("classic blender"), std::string("acme")},
      {std::string("smart kettle"), std::string("globex")},
      {std::nullopt, std::nullopt},
  };
  const Dataset d = tiny_dataset(rows);
  const HashedNgramProvider p(128, 3);
  const SimilarityMatrix m = build_similarity_matrix(p, d, d);
  CHECK(m.scores(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.scores(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  for (int j = 0; j < 3; ++j) CHECK(m.scores(2, j) == 0.0); // all-missing tuple embeds to zero
  CHECK(m.left_ids == std::vector<std::string>{"0", "1", "2"});
}

TEST_CASE("similarity entries match a scalar brute-force recomputation") {
  const auto rows = std::vector<std::vector<std::optional<std::string>>>{
      {std::string("classic blender mk1"), std::string("acme")},
      {std::string("smart kettle v2"), std::string("globex")},
      {std::string("wireless speaker"), std::string("initech")},
      {std::string("classic blender mk2"), std::string("acme")},
      {std::string("portable heater"), std::string("zenith")},
  };
  const Dataset left = tiny_dataset(rows);
  const auto rows_r = std::vector<std::vector<std::optional<std::string>>>{
      rows[2], rows[0], rows[4], rows[1], rows[3]};
  const Dataset right = tiny_dataset(rows_r);
  const HashedNgramProvider p(64, 11);
  const SimilarityMatrix m = build_similarity_matrix(p, left, right);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const Eigen::VectorXd a = p.embed_tuple(left, left.tuples[i]);
      const Eigen::VectorXd b = p.embed_tuple(right, right.tuples[j]);
      const std::vector<double> av(a.data(), a.data() + a.size());
      const std::vector<double> bv(b.data(), b.data() + b.size());
      const double expected = std::clamp(oracle::scalar_cosine(av, bv), 0.0, 1.0);
      CHECK(m.scores(i, j) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("clamping preserves the row argmax when the maximum is positive") {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> n;
  for (int round = 0; round < 50; ++round) {
    Eigen::MatrixXd a(4, 6), b(5, 6);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = n(gen);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = n(gen);
    const Eigen::MatrixXd raw = cosine_matrix(a, b);
    const Eigen::MatrixXd clamped = raw.cwiseMax(0.0).cwiseMin(1.0);
    for (int i = 0; i < raw.rows(); ++i) {
      Eigen::Index raw_arg, clamp_arg;
      const double mx = raw.row(i).maxCoeff(&raw_arg);
      clamped.row(i).maxCoeff(&clamp_arg);
      if (mx > 0.0) CHECK(raw_arg == clamp_arg);
    }
  }
}

TEST_CASE("embedding file round trip is bit exact and file provider looks up by id") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n;
  Eigen::MatrixXd rows(4, 6);
  for (int i = 0; i < rows.size(); ++i) rows.data()[i] = n(gen);
  rows.row(2).setZero();
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  const auto path = temp_path("roundtrip");
  write_embedding_file(path, ids, rows);
  const auto [back_ids, back] = read_embedding_file(path);
  CHECK(back_ids == ids);
  REQUIRE(back.rows() == rows.rows());
  for (int i = 0; i < rows.rows(); ++i)
    for (int j = 0; j < rows.cols(); ++j) CHECK(back(i, j) == rows(i, j)); // bit-for-bit

  const FileEmbeddingProvider fp(path);
  CHECK(fp.dimension() == 6);
  CHECK(fp.embed_text("c") == rows.row(2).transpose());
  CHECK_THROWS_WITH_AS(fp.embed_text("nope"), doctest::Contains("no entry"), std::runtime_error);
}

TEST_CASE("provider factory validates its spec") {
  EmbeddingProviderSpec spec;
  spec.kind = "hashed-ngram";
  spec.dimension = 32;
  CHECK(make_provider(spec)->dimension() == 32);
  spec.kind = "file";
  spec.path = "";
  CHECK_THROWS_AS(make_provider(spec), std::invalid_argument);
  spec.kind = "unknown";
  CHECK_THROWS_AS(make_provider(spec), std::invalid_argument);
  spec.kind = "hashed-ngram";
  spec.dimension = 0;
  CHECK_THROWS_AS(make_provider(spec), std::invalid_argument);
}

TEST_CASE("embed_dataset is deterministic across worker counts") {
  std::vector<std::vector<std::optional<std::string>>> rows;
  for (int i = 0; i < 100; ++i)
    rows.push_back({std::string("item number " + std::to_string(i * 37 % 100)),
                    std::string("brand " + std::to_string(i % 7))});
  const Dataset d = tiny_dataset(rows);
  const HashedNgramProvider p(64, 3);
  const Eigen::MatrixXd one = embed_dataset(p, d, 1);
  const Eigen::MatrixXd four = embed_dataset(p, d, 4);
  CHECK(one == four);
}
