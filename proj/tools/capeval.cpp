// capeval: reference-free evaluation of cross-lingual image captions.
//
//   capeval eval --scenario I --captions c.jsonl --references r.jsonl ...
//   capeval correlate --scores table.csv
//   capeval train-projector --pairs p.jsonl --embeddings e.txt --features f.txt --out proj.txt
//   capeval report --scores table.csv --format json

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "capeval/commands.hpp"

namespace {

using namespace capeval;

std::vector<MetricKind> parse_metric_list(const std::string& list) {
  std::vector<MetricKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_metric(item));
  return out;
}

// --format wins; otherwise the --out extension decides.
ReportFormat pick_format(const CLI::App* cmd, const std::string& format, const std::string& out) {
  if (cmd->count("--format") == 0 && !out.empty()) return format_for_path(out);
  return parse_report_format(format);
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

struct TokenizerFlags {
  std::string policy = "auto";
  bool keep_case = false;
  bool keep_punct = false;

  TokenizerOptions options() const {
    TokenizerOptions o;
    o.policy = parse_tokenizer_policy(policy);
    o.lowercase = !keep_case;
    o.strip_punctuation = !keep_punct;
    return o;
  }
};

void add_tokenizer_flags(CLI::App* cmd, TokenizerFlags& f) {
  cmd->add_option("--tokenizer", f.policy, "whitespace | cjk-char | auto")->capture_default_str();
  cmd->add_flag("--keep-case", f.keep_case, "do not lowercase tokens");
  cmd->add_flag("--keep-punctuation", f.keep_punct, "do not strip punctuation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-free evaluation of cross-lingual image captioning"};
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "score captions per model");
  struct {
    std::string captions, references, emb_s, emb_t, features, proj_s, proj_t, out, per_image;
    std::string scenario = "I", z_mode = "batch-max", metrics, format = "csv";
    double z = 0.0;
    int precision = 1, threads = 0;
    bool serial = false, all_refs = false;
    TokenizerFlags tok;
    std::uint64_t seed = 0;
  } ev;
  eval->add_option("--captions", ev.captions, "captions JSON-lines")->required();
  eval->add_option("--references", ev.references, "references JSON-lines");
  eval->add_option("--embeddings-source", ev.emb_s, "source-language word2vec text file");
  eval->add_option("--embeddings-target", ev.emb_t, "target-language word2vec text file");
  eval->add_option("--features", ev.features, "visual features text file");
  eval->add_option("--projector-source", ev.proj_s, "source-language projector");
  eval->add_option("--projector-target", ev.proj_t, "target-language projector");
  eval->add_option("--scenario", ev.scenario, "I (source refs available) or II")->capture_default_str();
  eval->add_option("--z-mode", ev.z_mode, "fixed | batch-max")->capture_default_str();
  eval->add_option("--z", ev.z, "WMDRel normalizer for --z-mode fixed");
  eval->add_option("--metrics", ev.metrics, "comma-separated metric list (default: all applicable)");
  eval->add_flag("--all-refs", ev.all_refs, "average WMDRel/CLinRel over every reference, not the first");
  eval->add_option("--format", ev.format, "csv | json")->capture_default_str();
  eval->add_option("--precision", ev.precision, "decimals in the report")->capture_default_str();
  eval->add_option("--out", ev.out, "report path (default stdout)");
  eval->add_option("--per-image-dir", ev.per_image, "write one score table per image here");
  eval->add_option("--threads", ev.threads, "OpenMP threads (0 = default)");
  eval->add_flag("--serial", ev.serial, "use the serial reference path");
  eval->add_option("--seed", ev.seed, "seed (evaluation itself is deterministic)");
  add_tokenizer_flags(eval, ev.tok);

  // correlate
  auto* corr = app.add_subcommand("correlate", "Spearman correlation between metric rankings");
  struct {
    std::string scores, proposed, standard, out, format = "csv";
    int precision = 3;
  } co;
  corr->add_option("--scores", co.scores, "score table (csv or json)")->required();
  corr->add_option("--proposed", co.proposed, "row metrics (default: WMDRel,CLinRel,CMedRel present)");
  corr->add_option("--standard", co.standard, "column metrics (default: standard metrics present)");
  corr->add_option("--format", co.format, "csv | json")->capture_default_str();
  corr->add_option("--precision", co.precision, "decimals in the report")->capture_default_str();
  corr->add_option("--out", co.out, "report path (default stdout)");

  // train-projector
  auto* train = app.add_subcommand("train-projector", "fit a ridge projector into the visual space");
  struct {
    std::string pairs, embeddings, features, out, language = "target";
    double lambda = 1.0, human_weight = 5.0;
    bool cv = false;
    int folds = 5;
    std::uint64_t seed = 0;
    TokenizerFlags tok;
  } tr;
  train->add_option("--pairs", tr.pairs, "training pairs JSON-lines")->required();
  train->add_option("--embeddings", tr.embeddings, "word2vec text file")->required();
  train->add_option("--features", tr.features, "visual features text file")->required();
  train->add_option("--out", tr.out, "projector output path")->required();
  train->add_option("--language", tr.language, "source | target")->capture_default_str();
  train->add_option("--lambda", tr.lambda, "ridge penalty")->capture_default_str();
  train->add_option("--human-weight", tr.human_weight, "weight of pairs with kind \"human\"")->capture_default_str();
  train->add_flag("--cv", tr.cv, "select lambda by k-fold cross-validation");
  train->add_option("--folds", tr.folds, "cross-validation folds")->capture_default_str();
  train->add_option("--seed", tr.seed, "fold shuffle seed")->capture_default_str();
  add_tokenizer_flags(train, tr.tok);

  // report
  auto* rep = app.add_subcommand("report", "re-render a score table, adding BMRC/WCC where possible");
  struct {
    std::string scores, out, format = "csv";
    int precision = 1;
  } rp;
  rep->add_option("--scores", rp.scores, "score table (csv or json)")->required();
  rep->add_option("--format", rp.format, "csv | json")->capture_default_str();
  rep->add_option("--precision", rp.precision, "decimals in the report")->capture_default_str();
  rep->add_option("--out", rp.out, "report path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval) {
      RunConfig cfg;
      cfg.captions = opt_path(ev.captions);
      cfg.references = opt_path(ev.references);
      cfg.embeddings_source = opt_path(ev.emb_s);
      cfg.embeddings_target = opt_path(ev.emb_t);
      cfg.features = opt_path(ev.features);
      cfg.projector_source = opt_path(ev.proj_s);
      cfg.projector_target = opt_path(ev.proj_t);
      cfg.out = opt_path(ev.out);
      cfg.per_image_dir = opt_path(ev.per_image);
      cfg.tokenizers.target = ev.tok.options();
      cfg.tokenizers.source = ev.tok.options();
      cfg.eval.scenario = parse_scenario(ev.scenario);
      cfg.eval.z_mode = parse_z_mode(ev.z_mode);
      cfg.eval.z = ev.z;
      cfg.eval.metrics = parse_metric_list(ev.metrics);
      cfg.eval.average_refs = ev.all_refs;
      cfg.eval.execution = ev.serial ? Execution::serial : Execution::parallel;
      cfg.eval.threads = ev.threads;
      cfg.report = {pick_format(eval, ev.format, ev.out), ev.precision};
      const auto text = cmd_eval(cfg, std::cerr);
      if (!cfg.out) std::cout << text;
    } else if (*corr) {
      CorrelateConfig cfg;
      cfg.scores = co.scores;
      cfg.proposed = parse_metric_list(co.proposed);
      cfg.standard = parse_metric_list(co.standard);
      cfg.out = opt_path(co.out);
      cfg.report = {pick_format(corr, co.format, co.out), co.precision};
      const auto text = cmd_correlate(cfg);
      if (!cfg.out) std::cout << text;
    } else if (*train) {
      TrainConfig cfg;
      cfg.pairs = tr.pairs;
      cfg.embeddings = tr.embeddings;
      cfg.features = tr.features;
      cfg.out = tr.out;
      cfg.language = parse_language(tr.language);
      cfg.lambda = tr.lambda;
      cfg.human_weight = tr.human_weight;
      cfg.cross_validate = tr.cv;
      cfg.folds = tr.folds;
      cfg.seed = tr.seed;
      cfg.tokenizer = tr.tok.options();
      cmd_train_projector(cfg, std::cerr);
    } else if (*rep) {
      ReportConfig cfg;
      cfg.scores = rp.scores;
      cfg.out = opt_path(rp.out);
      cfg.report = {pick_format(rep, rp.format, rp.out), rp.precision};
      const auto text = cmd_report(cfg);
      if (!cfg.out) std::cout << text;
    }
  } catch (const capeval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
