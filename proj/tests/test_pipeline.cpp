#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "ermatch/io.hpp"
#include "ermatch/pipeline.hpp"
#include "ermatch/synthetic.hpp"

using namespace ermatch;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  PipelineConfig cfg;
};

Workspace make_workspace(const char* tag, std::uint64_t seed = 5) {
  Workspace w;
  w.root = fs::temp_directory_path() /
           ("ermatch_pipe_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(w.root);
  fs::create_directories(w.root);

  SyntheticSpec spec;
  spec.left_size = 60;
  spec.right_size = 60;
  spec.match_count = 40;
  spec.typo_rate = 0.05;
  spec.delete_rate = 0.02;
  spec.seed = seed;
  const SyntheticData data = make_synthetic(spec);
  write_csv(data.left, (w.root / "left.csv").string());
  write_csv(data.right, (w.root / "right.csv").string());
  write_truth_tsv((w.root / "truth.tsv").string(), data.truth);

  w.cfg.left_csv = (w.root / "left.csv").string();
  w.cfg.right_csv = (w.root / "right.csv").string();
  w.cfg.ground_truth = (w.root / "truth.tsv").string();
  w.cfg.out_dir = (w.root / "run").string();
  w.cfg.seed = seed;
  // small fixture: keep the runtime down
  w.cfg.collab.epochs = 120;
  w.cfg.graph.epochs = 20;
  return w;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("run_all produces every artifact and a sane report") {
  Workspace w = make_workspace("runall");
  run_all(w.cfg);
  for (const char* name :
       {artifact::datasets, artifact::similarity, artifact::embeddings_left,
        artifact::embeddings_right, artifact::candidates, artifact::labels, artifact::graph_stats,
        artifact::graph_checkpoint, artifact::collab_model, artifact::predictions,
        artifact::metrics, artifact::anomalies}) {
    CHECK_MESSAGE(fs::exists(artifact_path(w.cfg, name)), name);
    CHECK_FALSE(fs::exists(artifact_path(w.cfg, name) + ".partial"));
  }
  const auto j = nlohmann::json::parse(slurp(artifact_path(w.cfg, artifact::metrics)));
  CHECK(j["all"]["f1"].get<double>() > 0.5);
  CHECK(j["label_quality"]["tpr"].get<double>() > 0.9);
  CHECK(j["config_hash"].get<std::string>() == config_hash(w.cfg));
}

TEST_CASE("stagewise execution reproduces run_all byte for byte") {
  Workspace w = make_workspace("compose");
  PipelineConfig all = w.cfg;
  all.out_dir = (w.root / "run_whole").string();
  PipelineConfig staged = w.cfg;
  staged.out_dir = (w.root / "run_staged").string();
  REQUIRE(config_hash(all) == config_hash(staged)); // out_dir stays out of the hash

  run_all(all);
  run_ingest(staged);
  run_embed(staged);
  run_block(staged);
  run_label(staged);
  run_graph(staged);
  run_train_graph(staged);
  run_train_collab(staged);
  run_predict(staged);
  run_eval(staged);
  run_anomaly(staged);

  CHECK(slurp(artifact_path(all, artifact::predictions)) ==
        slurp(artifact_path(staged, artifact::predictions)));
  CHECK(slurp(artifact_path(all, artifact::metrics)) ==
        slurp(artifact_path(staged, artifact::metrics)));
  CHECK(slurp(artifact_path(all, artifact::labels)) ==
        slurp(artifact_path(staged, artifact::labels)));
}

TEST_CASE("reruns with the same seed are bit identical") {
  Workspace w = make_workspace("determinism");
  run_all(w.cfg);
  const std::string pred1 = slurp(artifact_path(w.cfg, artifact::predictions));
  const std::string metrics1 = slurp(artifact_path(w.cfg, artifact::metrics));
  run_all(w.cfg);
  CHECK(pred1 == slurp(artifact_path(w.cfg, artifact::predictions)));
  CHECK(metrics1 == slurp(artifact_path(w.cfg, artifact::metrics)));
}

TEST_CASE("eval refuses artifacts from a different configuration unless forced") {
  Workspace w = make_workspace("hashgate");
  run_all(w.cfg);
  PipelineConfig other = w.cfg;
  other.seed = w.cfg.seed + 1; // changes the hash, artifacts on disk do not match
  CHECK_THROWS_WITH_AS(run_eval(other), doctest::Contains("config hash"), std::runtime_error);
  run_eval(other, /*force=*/true); // forced eval proceeds
}

TEST_CASE("a missing dataset fails in the ingest stage") {
  Workspace w = make_workspace("missing");
  w.cfg.left_csv = (w.root / "nope.csv").string();
  try {
    run_all(w.cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage == "ingest");
  }
}

TEST_CASE("externally supplied labels replace generation in supervised mode") {
  Workspace w = make_workspace("supervised");
  // build a hand-made label file from the ground truth
  LabeledIdPairs external;
  {
    const GroundTruth t = read_truth_tsv(*w.cfg.ground_truth);
    int i = 0;
    for (const auto& p : t.matches) {
      external.positives.push_back(p);
      external.negatives.emplace_back(p.first, std::to_string((std::stoi(p.second) + 7) % 60));
      if (++i >= 20) break;
    }
  }
  // negatives must not collide with positives
  std::set<IdPair> pos(external.positives.begin(), external.positives.end());
  std::erase_if(external.negatives, [&](const IdPair& p) { return pos.count(p) > 0; });
  const std::string ext_path = (w.root / "external_labels.tsv").string();
  write_labels_tsv(ext_path, external, "");

  w.cfg.labels_file = ext_path;
  run_ingest(w.cfg);
  run_embed(w.cfg);
  run_block(w.cfg);
  run_label(w.cfg);
  const auto [loaded, hash] = read_labels_tsv(artifact_path(w.cfg, artifact::labels));
  CHECK(loaded.positives == external.positives);
  CHECK(loaded.negatives == external.negatives);
  CHECK(hash == config_hash(w.cfg));
  run_graph(w.cfg);
  run_train_graph(w.cfg);
  run_train_collab(w.cfg);
  run_predict(w.cfg);
  CHECK(fs::exists(artifact_path(w.cfg, artifact::predictions)));
}

TEST_CASE("config json round trip preserves the hash") {
  Workspace w = make_workspace("configjson");
  const std::string text = config_to_json(w.cfg);
  const PipelineConfig back = config_from_json(text);
  CHECK(config_hash(back) == config_hash(w.cfg));
  CHECK(back.left_csv == w.cfg.left_csv);
  CHECK(back.collab.epochs == w.cfg.collab.epochs);
  CHECK(back.graph.epochs == w.cfg.graph.epochs);

  CHECK_THROWS_AS(config_from_json("{ not json"), std::runtime_error);
  CHECK_THROWS_WITH_AS(config_from_json("{}"), doctest::Contains("required"), std::runtime_error);
  CHECK_THROWS_AS(config_from_json(R"({"left_csv":"a","right_csv":"b","collab":{"mu":2.0}})"),
                  std::runtime_error);
}

TEST_CASE("the graph stats artifact reports the scale comparison") {
  Workspace w = make_workspace("graphstats");
  run_ingest(w.cfg);
  run_graph(w.cfg);
  const auto j = nlohmann::json::parse(slurp(artifact_path(w.cfg, artifact::graph_stats)));
  const auto nodes = j["left"]["nodes"].get<long long>();
  const auto ref_nodes = j["reference"]["left"]["embdi"]["nodes"].get<long long>();
  CHECK(ref_nodes > nodes);
  CHECK(j["left"]["edges"].get<long long>() <= j["reference"]["left"]["embdi"]["edges"].get<long long>());
}
