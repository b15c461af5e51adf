#include <doctest.h>

#include <map>
#include <set>

#include "ermatch/synthetic.hpp"
#include "oracles.hpp"

using namespace ermatch;

TEST_CASE("zero noise carries matched rows over verbatim") {
  SyntheticSpec spec;
  spec.left_size = 200;
  spec.right_size = 200;
  spec.match_count = 100;
  spec.seed = 4;
  const SyntheticData data = make_synthetic(spec);
  CHECK(data.truth.size() == 100);
  std::map<std::string, const Tuple*> right_by_id;
  for (const auto& t : data.right.tuples) right_by_id[t.id] = &t;
  for (const auto& [lid, rid] : data.truth) {
    const Tuple& l = data.left.tuples[static_cast<std::size_t>(std::stoi(lid))];
    CHECK(l.values == right_by_id.at(rid)->values);
  }
}

TEST_CASE("generation is deterministic under the seed") {
  SyntheticSpec spec;
  spec.left_size = 50;
  spec.right_size = 60;
  spec.match_count = 30;
  spec.typo_rate = 0.1;
  spec.delete_rate = 0.05;
  spec.swap_rate = 0.1;
  spec.seed = 9;
  const SyntheticData a = make_synthetic(spec);
  const SyntheticData b = make_synthetic(spec);
  CHECK(a.truth == b.truth);
  REQUIRE(a.left.size() == b.left.size());
  for (std::size_t i = 0; i < a.left.size(); ++i) CHECK(a.left.tuples[i].values == b.left.tuples[i].values);
  for (std::size_t i = 0; i < a.right.size(); ++i)
    CHECK(a.right.tuples[i].values == b.right.tuples[i].values);

  SyntheticSpec other = spec;
  other.seed = 10;
  const SyntheticData c = make_synthetic(other);
  bool any_diff = c.truth != a.truth;
  for (std::size_t i = 0; i < a.left.size() && !any_diff; ++i)
    any_diff = a.left.tuples[i].values != c.left.tuples[i].values;
  CHECK(any_diff);
}

TEST_CASE("left rows are unique") {
  SyntheticSpec spec;
  spec.left_size = 400;
  spec.right_size = 10;
  spec.match_count = 5;
  spec.seed = 3;
  const SyntheticData data = make_synthetic(spec);
  std::set<std::string> keys;
  for (const auto& t : data.left.tuples) {
    std::string k;
    for (const auto& v : t.values) k += (v ? *v : "") + "|";
    CHECK(keys.insert(k).second);
  }
}

TEST_CASE("measured character-edit fraction tracks the configured rate") {
  SyntheticSpec spec;
  spec.left_size = 300;
  spec.right_size = 300;
  spec.match_count = 300;
  spec.typo_rate = 0.1;
  spec.seed = 21;
  const SyntheticData data = make_synthetic(spec);
  std::map<std::string, const Tuple*> right_by_id;
  for (const auto& t : data.right.tuples) right_by_id[t.id] = &t;
  long long edits = 0, chars = 0;
  for (const auto& [lid, rid] : data.truth) {
    const Tuple& l = data.left.tuples[static_cast<std::size_t>(std::stoi(lid))];
    const Tuple& r = *right_by_id.at(rid);
    for (std::size_t c = 0; c < l.values.size(); ++c) {
      if (!l.values[c] || !r.values[c]) continue;
      edits += oracle::levenshtein(*l.values[c], *r.values[c]);
      chars += static_cast<long long>(l.values[c]->size());
    }
  }
  const double fraction = static_cast<double>(edits) / static_cast<double>(chars);
  CHECK(fraction == doctest::Approx(0.1).epsilon(0.3)); // within +-0.03
  CHECK(std::abs(fraction - 0.1) < 0.03);
}

TEST_CASE("deletion rate empties roughly that fraction of matched cells") {
  SyntheticSpec spec;
  spec.left_size = 400;
  spec.right_size = 400;
  spec.match_count = 400;
  spec.delete_rate = 0.05;
  spec.seed = 33;
  const SyntheticData data = make_synthetic(spec);
  std::map<std::string, const Tuple*> right_by_id;
  for (const auto& t : data.right.tuples) right_by_id[t.id] = &t;
  long long missing = 0, cells = 0;
  for (const auto& [lid, rid] : data.truth) {
    for (const auto& v : right_by_id.at(rid)->values) {
      ++cells;
      if (!v) ++missing;
    }
  }
  const double fraction = static_cast<double>(missing) / static_cast<double>(cells);
  CHECK(std::abs(fraction - 0.05) < 0.02);
}

TEST_CASE("infeasible specs are rejected") {
  SyntheticSpec spec;
  spec.left_size = 10;
  spec.right_size = 5;
  spec.match_count = 7;
  CHECK_THROWS_AS(make_synthetic(spec), std::invalid_argument);
  spec.match_count = -1;
  CHECK_THROWS_AS(make_synthetic(spec), std::invalid_argument);
}
