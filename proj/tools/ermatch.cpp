// Command-line front end for the tuple-matching pipeline. Subcommands mirror
// the pipeline stages and consume/produce the artifacts in --out (or the
// config's out_dir). Exit codes: 0 success, 1 usage error, 2 stage failure.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ermatch/collab_model.hpp"
#include "ermatch/dataset.hpp"
#include "ermatch/graph_model.hpp"
#include "ermatch/io.hpp"
#include "ermatch/pipeline.hpp"
#include "ermatch/synthetic.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "pipeline config JSON");
  if (config_required) c->required();
  cmd->add_option("--seed", [&opts](const std::vector<std::string>& v) {
    opts.seed = std::stoull(v.back());
    return true;
  }, "override the config seed");
  cmd->add_option("--threads", [&opts](const std::vector<std::string>& v) {
    opts.threads = std::stoi(v.back());
    return true;
  }, "cap worker threads");
  cmd->add_option("--out", [&opts](const std::vector<std::string>& v) {
    opts.out_dir = v.back();
    return true;
  }, "override the output directory");
}

ermatch::PipelineConfig resolve_config(const CommonOpts& opts) {
  ermatch::PipelineConfig cfg = ermatch::load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.threads) cfg.threads = *opts.threads;
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  return cfg;
}

int run_stage(const char* name, const CommonOpts& opts,
              void (*stage)(const ermatch::PipelineConfig&)) {
  try {
    stage(resolve_config(opts));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "stage " << name << " failed: " << e.what() << '\n';
    return 2;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised tuple matching across two relational datasets"};
  app.require_subcommand(1);

  CommonOpts opts;
  bool force = false;

  auto* ingest = app.add_subcommand("ingest", "validate the input datasets");
  add_common(ingest, opts);
  auto* embed = app.add_subcommand("embed", "tuple embeddings + similarity matrix");
  add_common(embed, opts);
  auto* block = app.add_subcommand("block", "bidirectional top-k candidate pairs");
  add_common(block, opts);
  auto* label = app.add_subcommand("label", "generate positive/negative pseudo labels");
  add_common(label, opts);
  auto* graph = app.add_subcommand("graph", "build multi-relational graphs + stats");
  add_common(graph, opts);
  auto* train_graph = app.add_subcommand("train-graph", "train graph embeddings");
  add_common(train_graph, opts);
  auto* train_collab = app.add_subcommand("train-collab", "train the pair classifier");
  add_common(train_collab, opts);
  auto* predict = app.add_subcommand("predict", "score candidate pairs");
  add_common(predict, opts);
  auto* eval = app.add_subcommand("eval", "metrics against ground truth");
  add_common(eval, opts);
  eval->add_flag("--force", force, "accept artifacts with mismatched config hash");
  auto* anomaly = app.add_subcommand("anomaly", "flag contradictory values across matches");
  add_common(anomaly, opts);
  auto* run_all_cmd = app.add_subcommand("run-all", "full pipeline, all stages in order");
  add_common(run_all_cmd, opts);
  run_all_cmd->add_flag("--force", force, "accept artifacts with mismatched config hash");

  auto* synth = app.add_subcommand("make-synthetic", "generate a labeled synthetic benchmark");
  ermatch::SyntheticSpec spec;
  std::string synth_out = "synthetic";
  synth->add_option("--left-size", spec.left_size, "tuples in the left dataset");
  synth->add_option("--right-size", spec.right_size, "tuples in the right dataset");
  synth->add_option("--matches", spec.match_count, "true matches carried to the right side");
  synth->add_option("--typo-rate", spec.typo_rate, "per-character edit probability");
  synth->add_option("--delete-rate", spec.delete_rate, "per-cell deletion probability");
  synth->add_option("--swap-rate", spec.swap_rate, "per-row value swap probability");
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory");

  auto* grad = app.add_subcommand("grad-check", "finite-difference check of both trainers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1; // usage errors exit 1, --help exits 0
  }

  if (synth->parsed()) {
    try {
      const ermatch::SyntheticData data = ermatch::make_synthetic(spec);
      std::filesystem::create_directories(synth_out);
      const auto path = [&](const char* n) {
        return (std::filesystem::path(synth_out) / n).string();
      };
      ermatch::write_csv(data.left, path("left.csv"));
      ermatch::write_csv(data.right, path("right.csv"));
      ermatch::write_truth_tsv(path("truth.tsv"), data.truth);

      ermatch::PipelineConfig cfg;
      cfg.left_csv = path("left.csv");
      cfg.right_csv = path("right.csv");
      cfg.ground_truth = path("truth.tsv");
      cfg.seed = spec.seed;
      cfg.out_dir = (std::filesystem::path(synth_out) / "run").string();
      ermatch::atomic_write_text(path("config.json"), ermatch::config_to_json(cfg) + "\n");
      std::cout << "wrote " << data.left.size() << "+" << data.right.size() << " tuples, "
                << data.truth.size() << " matches to " << synth_out << '\n';
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "make-synthetic failed: " << e.what() << '\n';
      return 2;
    }
  }

  if (grad->parsed()) {
    const double graph_err = ermatch::gradient_check_graph();
    const double collab_err = ermatch::gradient_check_collab();
    std::cout << "graph trainer max relative gradient error:  " << graph_err << '\n'
              << "collab trainer max relative gradient error: " << collab_err << '\n';
    const bool ok = graph_err < 1e-4 && collab_err < 1e-4;
    std::cout << (ok ? "OK (both < 1e-4)" : "FAILED (tolerance 1e-4)") << '\n';
    return ok ? 0 : 2;
  }

  if (ingest->parsed()) return run_stage("ingest", opts, ermatch::run_ingest);
  if (embed->parsed()) return run_stage("embed", opts, ermatch::run_embed);
  if (block->parsed()) return run_stage("block", opts, ermatch::run_block);
  if (label->parsed()) return run_stage("label", opts, ermatch::run_label);
  if (graph->parsed()) return run_stage("graph", opts, ermatch::run_graph);
  if (train_graph->parsed()) return run_stage("train-graph", opts, ermatch::run_train_graph);
  if (train_collab->parsed()) return run_stage("train-collab", opts, ermatch::run_train_collab);
  if (predict->parsed()) return run_stage("predict", opts, ermatch::run_predict);
  if (eval->parsed()) {
    try {
      ermatch::run_eval(resolve_config(opts), force);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "stage eval failed: " << e.what() << '\n';
      return 2;
    }
  }
  if (anomaly->parsed()) return run_stage("anomaly", opts, ermatch::run_anomaly);
  if (run_all_cmd->parsed()) {
    try {
      ermatch::run_all(resolve_config(opts), force);
      return 0;
    } catch (const ermatch::StageError& e) {
      std::cerr << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "run-all failed: " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}
