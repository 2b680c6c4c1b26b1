#pragma once

#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capeval/core.hpp"
#include "capeval/io.hpp"
#include "capeval/visual.hpp"
#include "capeval/wmd.hpp"

namespace capeval {

enum class Execution { serial, parallel };

/// Runs fn(i) for i in [0, n). The parallel path is an OpenMP loop; the serial
/// path is the reference. fn must write only to slot i of its outputs. The
/// first exception by index is rethrown after the loop.
void for_each_index(std::size_t n, Execution exec, int threads, const std::function<void(std::size_t)>& fn);

struct DistributionPair {
  const Distribution* a;
  const Distribution* b;
};

/// wmd distance of every pair, in input order.
std::vector<double> wmd_distances(std::span<const DistributionPair> pairs, Execution exec, int threads = 0);

enum class Scenario { I, II };
enum class ZMode { batch_max, fixed };

Scenario parse_scenario(std::string_view name);
ZMode parse_z_mode(std::string_view name);

/// Borrowed inputs; absent ones are null.
struct EvalInputs {
  const std::vector<CaptionRecord>* captions = nullptr;
  const ReferenceMap* references = nullptr;
  const EmbeddingTable* source_embeddings = nullptr;
  const EmbeddingTable* target_embeddings = nullptr;
  const VisualFeatures* features = nullptr;
  const Projector* source_projector = nullptr;
  const Projector* target_projector = nullptr;
};

struct EvalOptions {
  Scenario scenario = Scenario::I;
  std::vector<MetricKind> metrics;  // empty: every metric the scenario and inputs allow
  ZMode z_mode = ZMode::batch_max;
  double z = 0.0;                   // used when z_mode == fixed
  bool average_refs = false;        // average WMDRel/CLinRel over all refs instead of the first
  Execution execution = Execution::parallel;
  int threads = 0;                  // 0: OpenMP default
  bool per_image = false;
};

struct EvalResult {
  ScoreTable table;
  std::map<std::string, ScoreTable> per_image;  // filled when options.per_image
  std::vector<std::string> warnings;
  double z = 0.0;
  std::vector<MetricKind> metrics;  // computed metrics, declaration order
};

/// Resolves the metric set and checks that every required input is present.
/// Throws ConfigError naming the metric and the missing input.
std::vector<MetricKind> resolve_metrics(const EvalInputs& in, const EvalOptions& options);

/// Scores every (image, model) caption and reduces to per-model corpus scores.
EvalResult evaluate(const EvalInputs& in, const EvalOptions& options);

}  // namespace capeval
