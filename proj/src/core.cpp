#include "capeval/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace capeval {

AllOovError::AllOovError(std::vector<std::string> tokens)
    : Error([&] {
        std::string msg = "no in-vocabulary token among [";
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          if (i) msg += ", ";
          msg += tokens[i];
        }
        return msg + "]";
      }()),
      tokens_(std::move(tokens)) {}

std::string_view language_name(Language lang) {
  return lang == Language::source ? "source" : "target";
}

Language parse_language(std::string_view name) {
  if (name == "source" || name == "src") return Language::source;
  if (name == "target" || name == "tgt") return Language::target;
  throw ConfigError("unknown language tag: " + std::string(name));
}

TokenizerPolicy parse_tokenizer_policy(std::string_view name) {
  if (name == "whitespace") return TokenizerPolicy::whitespace;
  if (name == "cjk-char" || name == "cjk_char") return TokenizerPolicy::cjk_char;
  if (name == "auto" || name == "automatic") return TokenizerPolicy::automatic;
  throw ConfigError("unknown tokenizer policy: " + std::string(name));
}

Sentence::Sentence(std::vector<std::string> tokens, Language language, std::string raw)
    : tokens_(std::move(tokens)), language_(language), raw_(std::move(raw)) {
  if (tokens_.empty()) throw EmptySentence(raw_);
  for (const auto& tok : tokens_) {
    if (tok.empty()) throw ValueError("empty token in sentence \"" + raw_ + "\"");
    if (std::any_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c); }))
      throw ValueError("token contains whitespace: \"" + tok + "\"");
  }
}

namespace {

constexpr std::array<std::string_view, 9> kNames = {
    "BLEU-4", "METEOR", "ROUGE-L", "CIDEr", "BMRC", "WMDRel", "CLinRel", "CMedRel", "WCC"};

constexpr std::array<MetricKind, 4> kBmrcParts = kStandardMetrics;
constexpr std::array<MetricKind, 3> kWccParts = kProposedMetrics;

std::string squash(std::string_view s) {
  std::string out;
  for (unsigned char c : s)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

}  // namespace

std::string_view metric_name(MetricKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

MetricKind parse_metric(std::string_view name) {
  const std::string key = squash(name);
  for (MetricKind k : kAllMetrics)
    if (squash(metric_name(k)) == key) return k;
  if (key == "rougel") return MetricKind::ROUGE_L;
  if (key == "wmd") return MetricKind::WMDREL;
  if (key == "clin") return MetricKind::CLINREL;
  if (key == "cmed") return MetricKind::CMEDREL;
  throw ConfigError("unknown metric: " + std::string(name));
}

bool is_aggregate(MetricKind kind) { return kind == MetricKind::BMRC || kind == MetricKind::WCC; }

std::span<const MetricKind> aggregate_components(MetricKind kind) {
  if (kind == MetricKind::BMRC) return kBmrcParts;
  if (kind == MetricKind::WCC) return kWccParts;
  return {};
}

MetricRow aggregate(MetricRow row, MetricKind kind) {
  if (!is_aggregate(kind))
    throw ConfigError(std::string(metric_name(kind)) + " is not an aggregate metric");
  double sum = 0.0;
  for (MetricKind part : aggregate_components(kind)) {
    auto it = row.find(part);
    if (it == row.end()) throw MissingMetric(std::string(metric_name(part)), std::string(metric_name(kind)));
    sum += it->second;
  }
  row[kind] = sum;
  return row;
}

MetricRow aggregate_available(MetricRow row) {
  for (MetricKind agg : {MetricKind::BMRC, MetricKind::WCC}) {
    auto parts = aggregate_components(agg);
    if (std::all_of(parts.begin(), parts.end(), [&](MetricKind p) { return row.count(p) > 0; }))
      row = aggregate(std::move(row), agg);
  }
  return row;
}

std::optional<double> ScoreTable::get(const std::string& model, MetricKind metric) const {
  auto r = rows.find(model);
  if (r == rows.end()) return std::nullopt;
  auto m = r->second.find(metric);
  if (m == r->second.end()) return std::nullopt;
  return m->second;
}

std::vector<MetricKind> ScoreTable::metrics() const {
  std::vector<MetricKind> out;
  for (MetricKind k : kAllMetrics)
    if (std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.second.count(k) > 0; }))
      out.push_back(k);
  return out;
}

std::vector<std::string> ScoreTable::report_order() const {
  std::vector<std::string> ids;
  for (const auto& [id, row] : rows) ids.push_back(id);
  const bool by_bmrc = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) {
    return r.second.count(MetricKind::BMRC) > 0;
  });
  if (by_bmrc) {
    std::stable_sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
      return rows.at(a).at(MetricKind::BMRC) > rows.at(b).at(MetricKind::BMRC);
    });
  }
  return ids;
}

void ScoreTable::check_aggregates(double tol) const {
  for (const auto& [model, row] : rows) {
    for (MetricKind agg : {MetricKind::BMRC, MetricKind::WCC}) {
      auto it = row.find(agg);
      if (it == row.end()) continue;
      const double expected = aggregate(row, agg).at(agg);
      if (std::abs(expected - it->second) > tol)
        throw ValueError(model + ": " + std::string(metric_name(agg)) + " does not equal the sum of its components");
    }
  }
}

}  // namespace capeval
