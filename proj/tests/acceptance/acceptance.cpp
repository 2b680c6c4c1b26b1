// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "capeval/commands.hpp"
#include "capeval/ngram.hpp"
#include "capeval/rank.hpp"
#include "fixture.hpp"
#include "oracles/dense_lp.hpp"
#include "oracles/text_oracles.hpp"
#include "unit/wmd_gen.hpp"

using namespace capeval;

namespace {

int failures = 0;

void line(bool ok, const std::string& id, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  if (!ok) ++failures;
}

void info(const std::string& id, const std::string& detail) { std::printf("INFO %s: %s\n", id.c_str(), detail.c_str()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs `body`, which returns (ok, detail), and reports it with the elapsed time against `limit_s`.
void criterion(const std::string& id, double limit_s, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::pair<bool, std::string> r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool fast = s < limit_s;
  line(r.first && fast, id, r.second + fmt(" [%.3f s, limit %.0f s%s]", s, limit_s, fast ? "" : ", too slow"));
}

const std::string kScores = std::string(CAPEVAL_TEST_DATA) + "/model_scores.csv";

std::pair<bool, std::string> table3() {
  CorrelateConfig cfg;
  cfg.scores = kScores;
  const auto text = cmd_correlate(cfg);
  const auto m = correlate_table(load_score_table(kScores), cfg);
  struct Cell {
    const char *row, *col;
    double value;
  };
  const Cell asserted[] = {{"WMDRel", "BLEU-4", 0.929}, {"WMDRel", "ROUGE-L", 0.929}, {"WMDRel", "CIDEr", 0.714},
                           {"CMedRel", "CIDEr", 0.881}, {"CMedRel", "BMRC", 0.786},   {"WCC", "CIDEr", 1.000},
                           {"WCC", "BMRC", 0.952}};
  bool ok = !text.empty();
  std::string detail;
  for (const auto& c : asserted) {
    const double v = m.at(c.row, c.col);
    const bool good = std::abs(v - c.value) <= 0.001;
    ok = ok && good;
    detail += fmt("%s/%s=%.3f%s ", c.row, c.col, v, good ? "" : "(!)");
  }
  for (const auto& r : m.rows) {
    std::string row;
    for (const auto& c : m.cols) row += fmt(" %s=%.3f", c.c_str(), m.at(r, c));
    info("criterion 1 table", r + ":" + row);
  }
  return {ok, "7 asserted cells within 0.001: " + detail};
}

std::pair<bool, std::string> aggregates() {
  const auto t = load_score_table(kScores);
  double worst = 0.0;
  std::string off;
  for (const auto& [model, row] : t.rows) {
    MetricRow parts = row;
    parts.erase(MetricKind::BMRC);
    parts.erase(MetricKind::WCC);
    const auto full = aggregate_available(parts);
    for (MetricKind agg : {MetricKind::BMRC, MetricKind::WCC}) {
      const double diff = std::abs(full.at(agg) - row.at(agg));
      worst = std::max(worst, diff);
      if (diff > 0.05)
        off += fmt("; %s %s: components sum to %.1f, printed %.1f", model.c_str(), std::string(metric_name(agg)).c_str(),
                   full.at(agg), row.at(agg));
    }
  }
  MetricRow aoa{{MetricKind::BLEU4, 33.5}, {MetricKind::METEOR, 29.4}, {MetricKind::ROUGE_L, 52.7}, {MetricKind::CIDER, 97.5}};
  const double bmrc = aggregate(aoa, MetricKind::BMRC).at(MetricKind::BMRC);
  return {worst <= 0.05 && t.rows.size() == 8 && std::abs(bmrc - 213.1) <= 0.05,
          fmt("8 rows, max |recomputed - printed| = %.3f", worst) + off};
}

void wmd_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  const int n = 1000;
  int lp_bad = 0, sym_bad = 0, id_bad = 0, tri_bad = 0, rwmd_bad = 0, wcd_bad = 0, wcd_rwmd_bad = 0;
  double lp_worst = 0.0, feas_worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::size_t dim = 1 + static_cast<std::size_t>(i % 3);
    const auto a = gen::random_distribution(rng, 6, dim), b = gen::random_distribution(rng, 6, dim),
               c = gen::random_distribution(rng, 6, dim);
    const auto res = wmd(a, b);
    const double ab = res.distance;
    const double lp = oracle::transport_lp({a.weights().begin(), a.weights().end()},
                                           {b.weights().begin(), b.weights().end()}, ground_costs(a, b));
    lp_worst = std::max(lp_worst, std::abs(ab - lp));
    feas_worst = std::max(feas_worst, res.plan.feasibility_residual(a.weights(), b.weights()));
    lp_bad += std::abs(ab - lp) > 1e-7;
    sym_bad += std::abs(ab - wmd(b, a).distance) > 1e-9;
    id_bad += wmd(a, a).distance > 1e-12;
    tri_bad += wmd(a, c).distance > ab + wmd(b, c).distance + 1e-9;
    const double r = rwmd(a, b), w = wcd(a, b);
    rwmd_bad += r > ab + 1e-9;
    wcd_bad += w > ab + 1e-9;
    wcd_rwmd_bad += w > r + 1e-9;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  line(lp_bad == 0 && feas_worst < 1e-9, "criterion 3a",
       fmt("wmd vs dense LP on %d instances: max error %.2e, %d above 1e-7; max feasibility residual %.1e", n,
           lp_worst, lp_bad, feas_worst));
  line(sym_bad == 0, "criterion 3b", fmt("symmetry: %d violations", sym_bad));
  line(id_bad == 0, "criterion 3c", fmt("identity: %d violations", id_bad));
  line(tri_bad == 0, "criterion 3d", fmt("triangle inequality: %d violations", tri_bad));
  line(rwmd_bad == 0, "criterion 3e", fmt("rwmd <= wmd: %d violations", rwmd_bad));
  line(wcd_bad == 0, "criterion 3f", fmt("wcd <= wmd: %d violations", wcd_bad));
  line(wcd_rwmd_bad == 0, "criterion 3g",
       fmt("wcd <= rwmd: %d of %d instances violate it (the centroid bound and the relaxed bound are not ordered in "
           "general, e.g. a={(0,0):0.9,(10,0):0.1} b={(0,0):0.1,(10,0):0.9} gives wcd 8, rwmd 0)",
           wcd_rwmd_bad, n));
  const bool all = lp_bad + sym_bad + id_bad + tri_bad + rwmd_bad + wcd_bad + wcd_rwmd_bad == 0;
  std::printf("%s criterion 3: wmd oracle suite [%.3f s, limit 30 s]\n", all && s < 30 ? "PASS" : "FAIL", s);
  if (!(all && s < 30)) ++failures;
}

Sentence sent(const std::string& s) { return tokenize(s, Language::target, {TokenizerPolicy::whitespace}); }

std::pair<bool, std::string> ngram_suite() {
  bool ok = true;
  std::string detail;
  const std::vector<Sentence> id_c{sent("a man rides a brown horse"), sent("two dogs play in snow")};
  const std::vector<std::vector<Sentence>> id_r{{id_c[0]}, {id_c[1]}};
  const double bleu_id = bleu4_corpus(id_c, id_r), rouge_id = rouge_l(id_c[0], id_r[0]);
  ok = ok && std::abs(bleu_id - 100.0) < 1e-9 && std::abs(rouge_id - 100.0) < 1e-9;

  const std::vector<Sentence> c1{sent("a b c d e")};
  const std::vector<std::vector<Sentence>> r1{{sent("a b c d f")}};
  const double bleu = bleu4_corpus(c1, r1);
  const std::vector<Sentence> r2{sent("a b c d e")};
  const double rouge = rouge_l(sent("a c e"), r2);
  const std::vector<Sentence> r3{sent("a c b")};
  const double meteor = meteor_exact(sent("a b c"), r3);
  // hand oracles
  const double bleu_hand = 100.0 * std::pow(4.0 / 5 * 3.0 / 4 * 2.0 / 3 * 1.0 / 2, 0.25);
  const double rouge_hand = 100.0 * (1 + 1.44) * 1 * 0.6 / (0.6 + 1.44 * 1);
  const auto al = oracle::best_alignment({"a", "b", "c"}, {"a", "c", "b"});
  const double meteor_hand = 100.0 * (1 - 0.5 * std::pow(double(al.chunks) / al.matches, 3));
  const bool examples = std::abs(bleu - 66.87) <= 0.01 && std::abs(bleu - bleu_hand) <= 0.01 &&
                        std::abs(rouge - 71.76) <= 0.01 && std::abs(rouge - rouge_hand) <= 0.01 &&
                        std::abs(meteor - 85.19) <= 0.01 && std::abs(meteor - meteor_hand) <= 0.01;
  ok = ok && examples;
  detail += fmt("identity BLEU %.2f ROUGE-L %.2f; BLEU %.2f ROUGE-L %.2f METEOR %.2f; ", bleu_id, rouge_id, bleu,
                rouge, meteor);

  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> len(1, 7), tok(0, 4);
  auto random_tokens = [&] {
    std::vector<std::string> t(static_cast<std::size_t>(len(rng)));
    for (auto& s : t) s = std::string(1, static_cast<char>('a' + tok(rng)));
    return t;
  };
  double worst = 0.0;
  int compared = 0;
  for (int corpus_i = 0; corpus_i < 40; ++corpus_i) {
    const int images = 2 + corpus_i % 3;
    std::vector<std::vector<Sentence>> groups;
    std::vector<std::vector<std::vector<std::string>>> plain;
    for (int g = 0; g < images; ++g) {
      groups.emplace_back();
      plain.emplace_back();
      for (int r = 0; r < 1 + (g + corpus_i) % 3; ++r) {
        auto t = random_tokens();
        plain.back().push_back(t);
        groups.back().emplace_back(t, Language::target);
      }
    }
    const auto idf = IdfTable::build(groups);
    for (int g = 0; g < images; ++g) {
      const auto c = random_tokens();
      const double got = cider(Sentence(c, Language::target), groups[static_cast<std::size_t>(g)], idf);
      worst = std::max(worst, std::abs(got - oracle::dense_cider(c, plain[static_cast<std::size_t>(g)], plain)));
      ++compared;
    }
  }
  ok = ok && worst <= 1e-9;
  detail += fmt("CIDEr vs dense TF-IDF oracle on %d toy cases: max error %.1e", compared, worst);
  return {ok, detail};
}

std::pair<bool, std::string> projector_recovery() {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> g;
  const Eigen::Index d = 16, dv = 32;
  Eigen::MatrixXd A(dv, d);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(d);
    for (Eigen::Index k = 0; k < d; ++k) x(k) = g(rng);
    pairs.push_back({x, A * x, 1.0});
  }
  RidgeDiagnostics diag;
  const auto p = train_projector(pairs, 1e-9, Language::target, &diag);
  const double err = std::max((p.weights() - A).cwiseAbs().maxCoeff(), p.bias().cwiseAbs().maxCoeff());
  return {err <= 1e-6 && diag.max_relative_residual < 1e-8,
          fmt("d=16 d_v=32 lambda=1e-9: max |W - A| = %.2e, relative normal-equation residual %.2e (%d refinement steps)",
              err, diag.max_relative_residual, diag.refinement_steps)};
}

std::pair<bool, std::string> spearman_suite() {
  std::mt19937_64 rng(606);
  auto ranks_of = [](const std::vector<double>& v) {
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < v.size(); ++i) m["m" + std::to_string(i)] = v[i];
    return rank_scores(m);
  };
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(2, 12)(rng));
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 0.0);
    std::iota(y.begin(), y.end(), 0.0);
    std::shuffle(x.begin(), x.end(), rng);
    std::shuffle(y.begin(), y.end(), rng);
    const auto a = ranks_of(x), b = ranks_of(y);
    worst = std::max(worst, std::abs(spearman(a, b) - spearman_closed_form(a, b)));
  }
  const auto tied = ranks_of({3, 1, 1, 2, 3, 3});
  const double self = spearman(tied, tied);
  bool monotone = true;
  std::normal_distribution<double> g;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(10), w(10);
    for (auto& x : v) x = g(rng);
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::atan(v[i]) * 5.0 + 1.0;
    monotone = monotone && ranks_of(v).ranks == ranks_of(w).ranks;
  }
  return {worst <= 1e-12 && std::abs(self - 1.0) <= 1e-12 && monotone,
          fmt("10000 tie-free permutations: max |pearson-on-ranks - closed form| = %.1e; spearman(a,a) with ties = "
              "%.15f; monotone invariance %s",
              worst, self, monotone ? "holds" : "broken")};
}

std::pair<bool, std::string> determinism() {
  fixture::ScratchDir dir("acceptance");
  const auto paths = fixture::write(dir.path(), {});
  std::ostringstream log;
  auto cfg = fixture::run_config(paths);
  cfg.per_image_dir = dir.path() / "per";
  std::vector<std::string> reports;
  for (auto exec : {Execution::serial, Execution::serial, Execution::parallel, Execution::parallel}) {
    cfg.eval.execution = exec;
    cfg.eval.threads = exec == Execution::parallel ? 4 : 0;
    cfg.report.format = ReportFormat::csv;
    reports.push_back(cmd_eval(cfg, log));
    cfg.report.format = ReportFormat::json;
    reports.push_back(cmd_eval(cfg, log));
  }
  bool same = true;
  for (std::size_t i = 2; i < reports.size(); ++i) same = same && reports[i] == reports[i % 2];
  const auto rows = std::count(reports[0].begin(), reports[0].end(), '\n') - 1;
  return {same && rows == 3,
          fmt("50 images x 3 models, csv and json, serial x2 and parallel (4 threads) x2: reports %s",
              same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  criterion("criterion 1", 1.0, table3);
  criterion("criterion 2", 1.0, aggregates);
  wmd_suite();
  criterion("criterion 4", 10.0, ngram_suite);
  criterion("criterion 5", 10.0, projector_recovery);
  criterion("criterion 6", 60.0, spearman_suite);
  criterion("criterion 7", 30.0, determinism);
  info("criterion 8",
       "value-level reproduction of the published WMDRel/CLinRel/CMedRel scores and per-image scores needs "
       "unpublished normalizers, projector weights and image features; not checked");
  std::printf("%d criterion line(s) failed\n", failures);
  return failures ? 1 : 0;
}
