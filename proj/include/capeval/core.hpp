#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capeval/errors.hpp"

namespace capeval {

enum class Language { source, target };

std::string_view language_name(Language lang);
Language parse_language(std::string_view name);

enum class TokenizerPolicy {
  whitespace,  // split on whitespace runs only
  cjk_char,    // additionally one token per CJK codepoint
  automatic,   // whitespace, falling back to cjk_char for unsegmented CJK input
};

struct TokenizerOptions {
  TokenizerPolicy policy = TokenizerPolicy::automatic;
  bool lowercase = true;          // ASCII letters of non-CJK tokens
  bool strip_punctuation = true;  // ASCII and CJK/full-width punctuation
};

TokenizerPolicy parse_tokenizer_policy(std::string_view name);

/// A tokenized caption. Immutable; every token is non-empty and free of whitespace.
class Sentence {
public:
  Sentence(std::vector<std::string> tokens, Language language, std::string raw = {});

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  Language language() const { return language_; }
  const std::string& raw() const { return raw_; }

  bool operator==(const Sentence&) const = default;

private:
  std::vector<std::string> tokens_;
  Language language_;
  std::string raw_;
};

Sentence tokenize(std::string_view raw, Language language, const TokenizerOptions& options = {});

struct CaptionRecord {
  std::string image_id;
  std::string model_id;
  Sentence candidate;
};

struct ReferenceSet {
  std::string image_id;
  std::vector<Sentence> source_refs;
  std::vector<Sentence> target_refs;
  std::vector<Sentence> mt_refs;
};

/// Declaration order is the report column order.
enum class MetricKind { BLEU4, METEOR, ROUGE_L, CIDER, BMRC, WMDREL, CLINREL, CMEDREL, WCC };

inline constexpr std::array<MetricKind, 9> kAllMetrics = {
    MetricKind::BLEU4,  MetricKind::METEOR,  MetricKind::ROUGE_L,
    MetricKind::CIDER,  MetricKind::BMRC,    MetricKind::WMDREL,
    MetricKind::CLINREL, MetricKind::CMEDREL, MetricKind::WCC};

inline constexpr std::array<MetricKind, 4> kStandardMetrics = {
    MetricKind::BLEU4, MetricKind::METEOR, MetricKind::ROUGE_L, MetricKind::CIDER};

inline constexpr std::array<MetricKind, 3> kProposedMetrics = {
    MetricKind::WMDREL, MetricKind::CLINREL, MetricKind::CMEDREL};

/// Report name, e.g. "BLEU-4", "CIDEr", "WMDRel".
std::string_view metric_name(MetricKind kind);

/// Accepts report names and loose spellings ("bleu4", "rouge_l", "cmedrel"), case-insensitive.
MetricKind parse_metric(std::string_view name);

bool is_aggregate(MetricKind kind);

/// Components summed by an aggregate metric; empty for non-aggregates.
std::span<const MetricKind> aggregate_components(MetricKind kind);

using MetricRow = std::map<MetricKind, double>;

/// Returns `row` with the aggregate `kind` (BMRC or WCC) appended.
/// Throws MissingMetric naming the first absent component.
MetricRow aggregate(MetricRow row, MetricKind kind);

/// Appends every aggregate whose components are all present.
MetricRow aggregate_available(MetricRow row);

/// model x metric scores, stored at full precision in reporting units.
struct ScoreTable {
  std::map<std::string, MetricRow> rows;
  double scale = 100.0;

  void set(const std::string& model, MetricKind metric, double value) { rows[model][metric] = value; }
  std::optional<double> get(const std::string& model, MetricKind metric) const;

  /// Metrics present in at least one row, in declaration order.
  std::vector<MetricKind> metrics() const;

  /// Descending BMRC when every row has it, else ascending model id.
  std::vector<std::string> report_order() const;

  /// Throws ValueError when a stored aggregate disagrees with its components by more than `tol`.
  void check_aggregates(double tol = 1e-9) const;
};

}  // namespace capeval
