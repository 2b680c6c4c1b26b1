#include "capeval/commands.hpp"

#include <algorithm>

#include <json.hpp>

namespace capeval {

std::string cmd_eval(const RunConfig& config, std::ostream& log) {
  std::optional<std::vector<CaptionRecord>> captions;
  std::optional<ReferenceMap> references;
  std::optional<EmbeddingTable> emb_s, emb_t;
  std::optional<VisualFeatures> features;
  std::optional<Projector> proj_s, proj_t;

  if (!config.captions) throw ConfigError("eval needs --captions");
  captions = load_captions(*config.captions, config.tokenizers.target);
  if (config.references) references = load_references(*config.references, config.tokenizers);
  if (config.embeddings_source) emb_s = load_embeddings(*config.embeddings_source, Language::source);
  if (config.embeddings_target) emb_t = load_embeddings(*config.embeddings_target, Language::target);
  if (config.features) features = load_features(*config.features);
  if (config.projector_source) proj_s = load_projector(*config.projector_source);
  if (config.projector_target) proj_t = load_projector(*config.projector_target);

  EvalInputs in;
  in.captions = &*captions;
  if (references) in.references = &*references;
  if (emb_s) in.source_embeddings = &*emb_s;
  if (emb_t) in.target_embeddings = &*emb_t;
  if (features) in.features = &*features;
  if (proj_s) in.source_projector = &*proj_s;
  if (proj_t) in.target_projector = &*proj_t;

  EvalOptions options = config.eval;
  options.per_image = options.per_image || config.per_image_dir.has_value();
  const auto result = evaluate(in, options);
  for (const auto& w : result.warnings) log << "warning: " << w << "\n";

  if (config.per_image_dir) {
    fs::create_directories(*config.per_image_dir);
    const char* ext = config.report.format == ReportFormat::json ? ".json" : ".csv";
    for (const auto& [image, table] : result.per_image)
      write_report(table, *config.per_image_dir / (image + ext), config.report);
  }

  auto text = render_report(result.table, config.report);
  if (config.out) write_file(*config.out, text);
  return text;
}

CorrelationMatrix correlate_table(const ScoreTable& table, const CorrelateConfig& config) {
  const auto present = table.metrics();
  auto pick = [&](const std::vector<MetricKind>& chosen, auto all) {
    if (!chosen.empty()) return chosen;
    std::vector<MetricKind> out;
    for (MetricKind k : all)
      if (std::find(present.begin(), present.end(), k) != present.end()) out.push_back(k);
    return out;
  };
  const auto proposed = pick(config.proposed, kProposedMetrics);
  const auto standard = pick(config.standard, kStandardMetrics);
  if (proposed.empty() || standard.empty())
    throw ConfigError("correlate needs at least one proposed and one standard metric column");
  return correlate_all(table, proposed, standard);
}

std::string cmd_correlate(const CorrelateConfig& config) {
  const auto table = load_score_table(config.scores);
  const auto matrix = correlate_table(table, config);
  auto text = render_report(matrix, config.report);
  if (config.out) write_file(*config.out, text);
  return text;
}

std::vector<TrainingPair> load_training_pairs(const TrainConfig& config, const EmbeddingTable& table,
                                              const VisualFeatures& features, std::ostream& log) {
  using nlohmann::json;
  std::vector<TrainingPair> pairs;
  std::size_t lineno = 0, skipped = 0;
  const auto text = read_file(config.pairs);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!row.is_object() || !row.contains("image_id") || !row.contains("caption") || !row["caption"].is_string())
      throw FormatError("training pair needs image_id and caption", lineno);
    const auto& idv = row["image_id"];
    const std::string image = idv.is_string() ? idv.get<std::string>() : idv.dump();
    auto feat = features.find(image);
    if (!feat) throw FormatError("no visual feature for image " + image, lineno);

    double weight = 1.0;
    if (row.contains("weight")) weight = row["weight"].get<double>();
    else if (row.value("kind", std::string("mt")) == "human") weight = config.human_weight;

    Sentence s = [&] {
      try {
        return tokenize(row["caption"].get<std::string>(), config.language, config.tokenizer);
      } catch (const EmptySentence& e) {
        throw FormatError(e.what(), lineno);
      }
    }();
    try {
      auto repr = sentence_repr(s, table);
      pairs.push_back({std::move(repr.values),
                       Eigen::Map<const Eigen::VectorXd>(feat->data(), static_cast<Eigen::Index>(feat->size())),
                       weight});
    } catch (const AllOovError&) {
      ++skipped;
    }
  }
  if (skipped) log << "warning: skipped " << skipped << " training captions with no in-vocabulary token\n";
  return pairs;
}

Projector cmd_train_projector(const TrainConfig& config, std::ostream& log) {
  const auto table = load_embeddings(config.embeddings, config.language);
  const auto features = load_features(config.features);
  const auto pairs = load_training_pairs(config, table, features, log);
  double lambda = config.lambda;
  if (config.cross_validate) {
    lambda = select_lambda(pairs, config.lambda_grid, config.folds, config.seed);
    log << "cross-validation selected lambda " << lambda << "\n";
  }
  RidgeDiagnostics diag;
  auto projector = train_projector(pairs, lambda, config.language, &diag);
  if (diag.max_relative_residual >= 1e-8)
    log << "warning: normal-equation residual " << diag.max_relative_residual << " exceeds 1e-8\n";
  save_projector(projector, config.out);
  return projector;
}

std::string cmd_report(const ReportConfig& config) {
  auto table = load_score_table(config.scores);
  for (auto& [model, row] : table.rows) {
    const MetricRow full = aggregate_available(row);
    for (MetricKind agg : {MetricKind::BMRC, MetricKind::WCC})
      if (!row.count(agg) && full.count(agg)) row[agg] = full.at(agg);
  }
  auto text = render_report(table, config.report);
  if (config.out) write_file(*config.out, text);
  return text;
}

}  // namespace capeval
