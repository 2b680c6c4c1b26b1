#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "capeval/core.hpp"
#include "capeval/rank.hpp"

namespace capeval {

/// Dense keyed vectors stored contiguously, row-major, in file order.
class VectorTable {
public:
  explicit VectorTable(std::size_t dim = 0) : dim_(dim) {}

  /// Throws DuplicateToken (with `line` for diagnostics) or ValueError on arity / non-finite input.
  void add(std::string key, std::span<const double> values, std::size_t line = 0);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool contains(std::string_view key) const { return find(key).has_value(); }

  std::optional<std::span<const double>> find(std::string_view key) const;
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  const std::string& key(std::size_t i) const { return keys_[i]; }

private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

/// word2vec-style token embeddings for one language.
class EmbeddingTable : public VectorTable {
public:
  EmbeddingTable(std::size_t dim, Language language) : VectorTable(dim), language_(language) {}
  Language language() const { return language_; }

private:
  Language language_;
};

/// image id -> visual feature vector; every vector has positive norm.
class VisualFeatures : public VectorTable {
public:
  using VectorTable::VectorTable;
};

/// Parses "<count> <dim>" followed by `count` rows of "<key> <v1> ... <v_dim>".
EmbeddingTable parse_embeddings(std::string_view text, Language language);
VisualFeatures parse_features(std::string_view text);

EmbeddingTable load_embeddings(const std::filesystem::path& path, Language language);
VisualFeatures load_features(const std::filesystem::path& path);

/// Writes the same text format with shortest round-trip number formatting.
std::string format_vector_table(const VectorTable& table);
void write_vector_table(const VectorTable& table, const std::filesystem::path& path);

struct TokenizerConfig {
  TokenizerOptions source;
  TokenizerOptions target;
};

/// JSON-lines rows {image_id, model_id, caption}.
std::vector<CaptionRecord> parse_captions(std::string_view text, const TokenizerOptions& target);
std::vector<CaptionRecord> load_captions(const std::filesystem::path& path, const TokenizerOptions& target);

using ReferenceMap = std::map<std::string, ReferenceSet>;

/// JSON-lines rows {image_id, source:[...], target:[...]?, mt:[...]?}.
ReferenceMap parse_references(std::string_view text, const TokenizerConfig& tokenizers);
ReferenceMap load_references(const std::filesystem::path& path, const TokenizerConfig& tokenizers);

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(std::string_view name);
/// json for a ".json" extension, csv otherwise.
ReportFormat format_for_path(const std::filesystem::path& path);

struct ReportOptions {
  ReportFormat format = ReportFormat::csv;
  int precision = 1;  // decimals printed; stored scores keep full precision
};

std::string render_report(const ScoreTable& table, const ReportOptions& options);
std::string render_report(const CorrelationMatrix& matrix, const ReportOptions& options);
void write_report(const ScoreTable& table, const std::filesystem::path& path, const ReportOptions& options);
void write_report(const CorrelationMatrix& matrix, const std::filesystem::path& path,
                  const ReportOptions& options);

ScoreTable parse_score_table(std::string_view text, ReportFormat format);
ScoreTable load_score_table(const std::filesystem::path& path);

/// RFC-4180 CSV helpers.
std::string csv_escape(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace capeval
