#include <doctest.h>

#include <random>
#include <set>

#include "ermatch/blocking.hpp"
#include "ermatch/dataset.hpp"
#include "ermatch/embedding.hpp"
#include "oracles.hpp"

using namespace ermatch;

namespace {
std::set<std::pair<int, int>> as_set(const CandidateSet& cs) {
  return {cs.pairs.begin(), cs.pairs.end()};
}
} // namespace

TEST_CASE("k covering the whole universe yields the full cross product") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 4);
  const CandidateSet cs = block_topk(m, 4);
  CHECK(cs.pairs.size() == 12);
}

TEST_CASE("k=1 on a perfect-matching matrix keeps exactly the matching") {
  Eigen::MatrixXd m(6, 6);
  m.setConstant(0.1);
  const int perm[6] = {3, 0, 5, 1, 4, 2};
  for (int i = 0; i < 6; ++i) m(i, perm[i]) = 0.9;
  const CandidateSet cs = block_topk(m, 1);
  CHECK(as_set(cs) == oracle::topk_pairs(m, 1));
  CHECK(cs.pairs.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(as_set(cs).count({i, perm[i]}) == 1);
}

TEST_CASE("k=2 on a small fixture equals the exhaustive scan oracle") {
  Eigen::MatrixXd m(4, 4);
  m << 0.9, 0.8, 0.1, 0.1,
       0.2, 0.9, 0.7, 0.1,
       0.1, 0.2, 0.9, 0.6,
       0.5, 0.1, 0.2, 0.9;
  CHECK(as_set(block_topk(m, 2)) == oracle::topk_pairs(m, 2));
}

TEST_CASE("random matrices match the oracle, including ties") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> coarse(0, 4); // few levels force ties
  for (int round = 0; round < 60; ++round) {
    const int rows = 2 + static_cast<int>(gen() % 7), cols = 2 + static_cast<int>(gen() % 7);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = coarse(gen) / 4.0;
    const int k = 1 + static_cast<int>(gen() % 3);
    CHECK(as_set(block_topk(m, k)) == oracle::topk_pairs(m, k));
  }
}

TEST_CASE("candidate sets grow monotonically in k") {
  std::mt19937_64 gen(8);
  for (int round = 0; round < 20; ++round) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(6, 5);
    for (int k = 1; k < 5; ++k) {
      const auto small = as_set(block_topk(m, k));
      const auto big = as_set(block_topk(m, k + 1));
      for (const auto& p : small) CHECK(big.count(p) == 1);
    }
  }
}

TEST_CASE("true matches that are row maxima survive blocking at k=1") {
  Dataset d;
  d.attributes = {"Title"};
  for (int i = 0; i < 12; ++i) {
    Tuple t;
    t.id = std::to_string(i);
    t.values = {std::string("distinct item number " + std::to_string(i) + " variant " +
                            std::string(1, static_cast<char>('a' + i)))};
    d.tuples.push_back(std::move(t));
  }
  const HashedNgramProvider p(128, 3);
  const SimilarityMatrix m = build_similarity_matrix(p, d, d);
  const auto pairs = as_set(block_topk(m.scores, 1));
  for (int i = 0; i < 12; ++i) CHECK(pairs.count({i, i}) == 1);
}

TEST_CASE("k below one is rejected") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(2, 2);
  CHECK_THROWS_AS(block_topk(m, 0), std::invalid_argument);
}
