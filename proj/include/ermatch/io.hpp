#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ermatch/anomaly.hpp"
#include "ermatch/collab_model.hpp"
#include "ermatch/embedding.hpp"
#include "ermatch/graph_model.hpp"
#include "ermatch/metrics.hpp"
#include "ermatch/relgraph.hpp"

namespace ermatch {

/// Artifact files begin with "# config_hash=<hex>" so stages can detect
/// inputs produced under a different configuration. Writers emit to
/// "<path>.partial" and rename on success.

struct LabeledIdPairs {
  std::vector<std::pair<std::string, std::string>> positives;
  std::vector<std::pair<std::string, std::string>> negatives;
};

void write_candidates_tsv(const std::string& path, const std::vector<IdPair>& pairs,
                          const std::string& config_hash);
std::pair<std::vector<IdPair>, std::string> read_candidates_tsv(const std::string& path);

void write_labels_tsv(const std::string& path, const LabeledIdPairs& labels,
                      const std::string& config_hash);
std::pair<LabeledIdPairs, std::string> read_labels_tsv(const std::string& path);

struct PredictionRow {
  std::string left_id, right_id;
  double probability;
  int label;
};
void write_predictions_tsv(const std::string& path, const std::vector<PredictionRow>& rows,
                           const std::string& config_hash);
std::pair<std::vector<PredictionRow>, std::string> read_predictions_tsv(const std::string& path);

/// Ground truth: plain "left_id<TAB>right_id" lines, no hash header.
GroundTruth read_truth_tsv(const std::string& path);
void write_truth_tsv(const std::string& path, const std::vector<IdPair>& pairs);

void write_similarity_file(const std::string& path, const SimilarityMatrix& m,
                           const std::string& config_hash);
std::pair<SimilarityMatrix, std::string> read_similarity_file(const std::string& path);

void write_graph_files(const std::string& nodes_path, const std::string& edges_path,
                       const MultiRelGraph& g, const std::string& config_hash);

struct GraphCheckpoint {
  GnnParams params;
  std::vector<std::string> left_ids, right_ids;
  Eigen::MatrixXd left_embeddings, right_embeddings;
};
void write_graph_checkpoint(const std::string& path, const GraphCheckpoint& ck,
                            const std::string& config_hash);
std::pair<GraphCheckpoint, std::string> read_graph_checkpoint(const std::string& path);

void write_collab_model(const std::string& path, const CollabParams& params,
                        const std::string& config_hash);
std::pair<CollabParams, std::string> read_collab_model(const std::string& path);

void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace,
                          const std::string& config_hash);

void write_anomalies_jsonl(const std::string& path, const std::vector<AnomalyRecord>& records,
                           const std::string& config_hash);

/// Render to a text file atomically: write "<path>.partial", then rename.
void atomic_write_text(const std::string& path, const std::string& content);

/// Round-trip double formatting (%.17g).
std::string format_double(double v);

} // namespace ermatch
