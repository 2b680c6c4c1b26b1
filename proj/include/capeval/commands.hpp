#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "capeval/evaluate.hpp"
#include "capeval/io.hpp"
#include "capeval/visual.hpp"

namespace capeval {

namespace fs = std::filesystem;

struct RunConfig {
  std::optional<fs::path> captions;
  std::optional<fs::path> references;
  std::optional<fs::path> embeddings_source;
  std::optional<fs::path> embeddings_target;
  std::optional<fs::path> features;
  std::optional<fs::path> projector_source;
  std::optional<fs::path> projector_target;
  std::optional<fs::path> out;            // report destination; returned only when absent
  std::optional<fs::path> per_image_dir;  // one score table per image
  TokenizerConfig tokenizers;
  EvalOptions eval;
  ReportOptions report;
};

/// Loads every configured input, scores, and renders the report. Warnings go to `log`.
std::string cmd_eval(const RunConfig& config, std::ostream& log);

struct CorrelateConfig {
  fs::path scores;
  std::vector<MetricKind> proposed;  // empty: proposed metrics present in the table
  std::vector<MetricKind> standard;  // empty: standard metrics present in the table
  std::optional<fs::path> out;
  ReportOptions report{ReportFormat::csv, 3};
};

CorrelationMatrix correlate_table(const ScoreTable& table, const CorrelateConfig& config);
std::string cmd_correlate(const CorrelateConfig& config);

struct TrainConfig {
  fs::path pairs;  // JSON-lines {image_id, caption, kind?: "mt"|"human", weight?}
  fs::path embeddings;
  fs::path features;
  fs::path out;
  Language language = Language::target;
  double lambda = 1.0;
  bool cross_validate = false;
  int folds = 5;
  std::uint64_t seed = 0;
  double human_weight = 5.0;
  std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  TokenizerOptions tokenizer;
};

std::vector<TrainingPair> load_training_pairs(const TrainConfig& config, const EmbeddingTable& table,
                                              const VisualFeatures& features, std::ostream& log);
Projector cmd_train_projector(const TrainConfig& config, std::ostream& log);

struct ReportConfig {
  fs::path scores;
  std::optional<fs::path> out;
  ReportOptions report;
};

/// Re-renders a score table (csv or json) with aggregates recomputed where complete.
std::string cmd_report(const ReportConfig& config);

}  // namespace capeval
