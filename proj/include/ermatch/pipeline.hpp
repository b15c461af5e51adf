#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ermatch/collab_model.hpp"
#include "ermatch/embedding.hpp"
#include "ermatch/graph_model.hpp"
#include "ermatch/labels.hpp"

namespace ermatch {

struct AnomalyConfig {
  double jaccard_threshold = 0.9;
  std::optional<std::vector<std::pair<std::string, std::string>>> mapping; // default: by name
};

struct PipelineConfig {
  std::string left_csv, right_csv;
  std::optional<std::string> left_id_column, right_id_column;
  std::optional<std::string> ground_truth; // TSV of true matches; enables eval
  std::optional<std::string> labels_file;  // external labels TSV; skips label generation
  EmbeddingProviderSpec embedding;         // sentence space (dimension n)
  std::optional<std::string> embedding_left_path, embedding_right_path; // file kind only
  int blocking_k = 20;
  PositiveLabelConfig positive_labels;
  NegativeLabelConfig negative_labels;
  GraphTrainConfig graph; // value space (dimension c)
  CollabConfig collab;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
  AnomalyConfig anomaly;
};

PipelineConfig config_from_json(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);

/// Hex FNV-1a of the canonical config JSON; embedded in every artifact.
std::string config_hash(const PipelineConfig& cfg);

/// Artifact names inside out_dir, stage order. run-all produces all of them.
namespace artifact {
inline constexpr const char* datasets = "datasets.json";
inline constexpr const char* similarity = "similarity.mtx";
inline constexpr const char* embeddings_left = "embeddings_left.txt";
inline constexpr const char* embeddings_right = "embeddings_right.txt";
inline constexpr const char* candidates = "candidates.tsv";
inline constexpr const char* labels = "labels.tsv";
inline constexpr const char* graph_stats = "graph_stats.json";
inline constexpr const char* graph_left_nodes = "graph_left_nodes.tsv";
inline constexpr const char* graph_left_edges = "graph_left_edges.tsv";
inline constexpr const char* graph_right_nodes = "graph_right_nodes.tsv";
inline constexpr const char* graph_right_edges = "graph_right_edges.tsv";
inline constexpr const char* graph_checkpoint = "graph_checkpoint.txt";
inline constexpr const char* graph_loss = "graph_loss.csv";
inline constexpr const char* collab_model = "collab_model.txt";
inline constexpr const char* collab_loss = "collab_loss.csv";
inline constexpr const char* predictions = "predictions.tsv";
inline constexpr const char* metrics = "metrics.json";
inline constexpr const char* anomalies = "anomalies.jsonl";
} // namespace artifact

std::string artifact_path(const PipelineConfig& cfg, const char* name);

/// Stage entry points. Each loads what it needs from disk (inputs or prior
/// artifacts), writes its artifact(s) atomically, and throws on failure.
void run_ingest(const PipelineConfig& cfg);
void run_embed(const PipelineConfig& cfg);
void run_block(const PipelineConfig& cfg);
void run_label(const PipelineConfig& cfg);
void run_graph(const PipelineConfig& cfg);
void run_train_graph(const PipelineConfig& cfg);
void run_train_collab(const PipelineConfig& cfg);
void run_predict(const PipelineConfig& cfg);
void run_eval(const PipelineConfig& cfg, bool force = false);
void run_anomaly(const PipelineConfig& cfg);

/// All stages in order. Failures carry the stage name.
void run_all(const PipelineConfig& cfg, bool force_eval = false);

struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error("stage " + stage_name + ": " + what), stage(std::move(stage_name)) {}
};

} // namespace ermatch
