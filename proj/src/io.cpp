#include "capeval/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace capeval {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void VectorTable::add(std::string key, std::span<const double> values, std::size_t line) {
  if (values.size() != dim_)
    throw ValueError("vector for \"" + key + "\" has " + std::to_string(values.size()) +
                     " components, expected " + std::to_string(dim_));
  for (double v : values)
    if (!std::isfinite(v))
      throw ValueError("non-finite component in vector for \"" + key + "\"" +
                       (line ? " (line " + std::to_string(line) + ")" : std::string()));
  if (index_.count(key)) throw DuplicateToken(key, line);
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::span<const double>> VectorTable::find(std::string_view key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, ++lineno);
    pos = end + 1;
  }
}

double parse_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("not a number: \"" + std::string(s) + "\"", line);
  return v;
}

std::size_t parse_count(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("not a non-negative integer: \"" + std::string(s) + "\"", line);
  return v;
}

template <typename Table, typename Make>
Table parse_vector_rows(std::string_view text, Make&& make) {
  std::optional<Table> table;
  std::size_t expected = 0, seen = 0, last_line = 0;
  std::vector<double> values;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    last_line = lineno;
    const auto fields = split_fields(line);
    if (!table) {
      if (fields.size() != 2) throw FormatError("header must be \"<count> <dim>\"", lineno);
      expected = parse_count(fields[0], lineno);
      const std::size_t dim = parse_count(fields[1], lineno);
      if (dim == 0) throw FormatError("dimension must be positive", lineno);
      table.emplace(make(dim));
      return;
    }
    if (fields.empty()) {
      if (seen == expected) return;  // trailing blank line
      throw FormatError("blank line inside table", lineno);
    }
    if (seen == expected)
      throw FormatError("more rows than the header count " + std::to_string(expected), lineno);
    if (fields.size() != table->dim() + 1)
      throw FormatError("expected " + std::to_string(table->dim() + 1) + " fields, found " +
                            std::to_string(fields.size()),
                        lineno);
    values.clear();
    for (std::size_t k = 1; k < fields.size(); ++k) values.push_back(parse_real(fields[k], lineno));
    table->add(std::string(fields[0]), values, lineno);
    ++seen;
  });
  if (!table) throw FormatError("missing header", 1);
  if (seen != expected)
    throw FormatError("header announces " + std::to_string(expected) + " rows, found " + std::to_string(seen),
                      last_line + 1);
  return std::move(*table);
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int precision) {
  const double scale = std::pow(10.0, precision);
  double r = std::round(v * scale) / scale;
  if (r == 0.0) r = 0.0;  // no "-0.0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, r);
  return buf;
}

double rounded(double v, int precision) {
  const double scale = std::pow(10.0, precision);
  const double r = std::round(v * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

std::string id_field(const json& row, const char* name, std::size_t line) {
  auto it = row.find(name);
  if (it == row.end()) throw FormatError(std::string("missing field \"") + name + "\"", line);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw FormatError(std::string("field \"") + name + "\" must be a string or integer", line);
}

std::vector<Sentence> sentence_list(const json& row, const char* name, Language lang,
                                    const TokenizerOptions& opt, std::size_t line) {
  std::vector<Sentence> out;
  auto it = row.find(name);
  if (it == row.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(tokenize(it->get<std::string>(), lang, opt));
    return out;
  }
  if (!it->is_array()) throw FormatError(std::string("field \"") + name + "\" must be a list of strings", line);
  for (const auto& s : *it) {
    if (!s.is_string()) throw FormatError(std::string("field \"") + name + "\" must be a list of strings", line);
    out.push_back(tokenize(s.get<std::string>(), lang, opt));
  }
  return out;
}

template <typename Fn>
void for_each_json_line(std::string_view text, Fn&& fn) {
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!row.is_object()) throw FormatError("JSON line is not an object", lineno);
    try {
      fn(row, lineno);
    } catch (const EmptySentence& e) {
      throw FormatError(e.what(), lineno);
    } catch (const json::exception& e) {
      throw FormatError(e.what(), lineno);
    }
  });
}

std::vector<MetricKind> report_metrics(const ScoreTable& table) { return table.metrics(); }

}  // namespace

EmbeddingTable parse_embeddings(std::string_view text, Language language) {
  return parse_vector_rows<EmbeddingTable>(text, [&](std::size_t dim) { return EmbeddingTable(dim, language); });
}

VisualFeatures parse_features(std::string_view text) {
  auto table = parse_vector_rows<VisualFeatures>(text, [](std::size_t dim) { return VisualFeatures(dim); });
  for (std::size_t i = 0; i < table.size(); ++i) {
    double n2 = 0.0;
    for (double v : table.row(i)) n2 += v * v;
    if (n2 == 0.0) throw ValueError("feature vector for \"" + table.key(i) + "\" has zero norm");
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, Language language) {
  return parse_embeddings(read_file(path), language);
}

VisualFeatures load_features(const std::filesystem::path& path) { return parse_features(read_file(path)); }

std::string format_vector_table(const VectorTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.key(i);
    for (double v : table.row(i)) {
      out += ' ';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

void write_vector_table(const VectorTable& table, const std::filesystem::path& path) {
  write_file(path, format_vector_table(table));
}

std::vector<CaptionRecord> parse_captions(std::string_view text, const TokenizerOptions& target) {
  std::vector<CaptionRecord> out;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  for_each_json_line(text, [&](const json& row, std::size_t line) {
    std::string image = id_field(row, "image_id", line);
    std::string model = id_field(row, "model_id", line);
    auto cap = row.find("caption");
    if (cap == row.end() || !cap->is_string()) throw FormatError("missing string field \"caption\"", line);
    if (!seen.emplace(std::pair{image, model}, line).second)
      throw FormatError("duplicate caption for image " + image + " and model " + model, line);
    out.push_back({std::move(image), std::move(model), tokenize(cap->get<std::string>(), Language::target, target)});
  });
  return out;
}

std::vector<CaptionRecord> load_captions(const std::filesystem::path& path, const TokenizerOptions& target) {
  return parse_captions(read_file(path), target);
}

ReferenceMap parse_references(std::string_view text, const TokenizerConfig& tok) {
  ReferenceMap out;
  for_each_json_line(text, [&](const json& row, std::size_t line) {
    ReferenceSet refs;
    refs.image_id = id_field(row, "image_id", line);
    refs.source_refs = sentence_list(row, "source", Language::source, tok.source, line);
    refs.target_refs = sentence_list(row, "target", Language::target, tok.target, line);
    refs.mt_refs = sentence_list(row, "mt", Language::target, tok.target, line);
    const std::string id = refs.image_id;
    if (!out.emplace(id, std::move(refs)).second) throw FormatError("duplicate references for image " + id, line);
  });
  return out;
}

ReferenceMap load_references(const std::filesystem::path& path, const TokenizerConfig& tokenizers) {
  return parse_references(read_file(path), tokenizers);
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ConfigError("unknown report format: " + std::string(name));
}

ReportFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? ReportFormat::json : ReportFormat::csv;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  std::size_t i = 0, line = 1;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty() && !any)) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty()) throw FormatError("quote inside unquoted CSV field", line);
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF handled on '\n'
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      field += c;
      any = true;
    }
    ++i;
  }
  if (quoted) throw FormatError("unterminated quoted CSV field", line);
  if (any || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string render_report(const ScoreTable& table, const ReportOptions& options) {
  const auto metrics = report_metrics(table);
  const auto order = table.report_order();
  if (options.format == ReportFormat::csv) {
    std::string out = "model";
    for (MetricKind k : metrics) out += "," + std::string(metric_name(k));
    out += "\n";
    for (const auto& model : order) {
      out += csv_escape(model);
      const auto& row = table.rows.at(model);
      for (MetricKind k : metrics) {
        out += ",";
        if (auto it = row.find(k); it != row.end()) out += fixed(it->second, options.precision);
      }
      out += "\n";
    }
    return out;
  }
  ordered_json doc;
  doc["scale"] = table.scale;
  doc["metrics"] = ordered_json::array();
  for (MetricKind k : metrics) doc["metrics"].push_back(std::string(metric_name(k)));
  doc["rows"] = ordered_json::array();
  for (const auto& model : order) {
    ordered_json row;
    row["model"] = model;
    row["scores"] = ordered_json::object();
    const auto& scores = table.rows.at(model);
    for (MetricKind k : metrics)
      if (auto it = scores.find(k); it != scores.end())
        row["scores"][std::string(metric_name(k))] = rounded(it->second, options.precision);
    doc["rows"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

std::string render_report(const CorrelationMatrix& m, const ReportOptions& options) {
  if (options.format == ReportFormat::csv) {
    std::string out = "metric";
    for (const auto& c : m.cols) out += "," + csv_escape(c);
    out += "\n";
    for (const auto& r : m.rows) {
      out += csv_escape(r);
      for (const auto& c : m.cols) out += "," + fixed(m.at(r, c), options.precision);
      out += "\n";
    }
    return out;
  }
  ordered_json doc;
  doc["rows"] = m.rows;
  doc["columns"] = m.cols;
  doc["values"] = ordered_json::array();
  for (const auto& r : m.rows) {
    ordered_json line = ordered_json::array();
    for (const auto& c : m.cols) line.push_back(rounded(m.at(r, c), options.precision));
    doc["values"].push_back(std::move(line));
  }
  return doc.dump(2) + "\n";
}

void write_report(const ScoreTable& table, const std::filesystem::path& path, const ReportOptions& options) {
  write_file(path, render_report(table, options));
}

void write_report(const CorrelationMatrix& matrix, const std::filesystem::path& path,
                  const ReportOptions& options) {
  write_file(path, render_report(matrix, options));
}

ScoreTable parse_score_table(std::string_view text, ReportFormat format) {
  ScoreTable table;
  if (format == ReportFormat::csv) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw FormatError("empty score table", 1);
    std::vector<MetricKind> cols;
    for (std::size_t c = 1; c < rows[0].size(); ++c) cols.push_back(parse_metric(rows[0][c]));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != cols.size() + 1)
        throw FormatError("expected " + std::to_string(cols.size() + 1) + " columns", r + 1);
      if (table.rows.count(row[0])) throw FormatError("duplicate model " + row[0], r + 1);
      auto& out = table.rows[row[0]];
      for (std::size_t c = 0; c < cols.size(); ++c)
        if (!row[c + 1].empty()) out[cols[c]] = parse_real(row[c + 1], r + 1);
    }
    return table;
  }
  json doc;
  try {
    doc = json::parse(text);
    if (doc.contains("scale")) table.scale = doc.at("scale").get<double>();
    for (const auto& row : doc.at("rows")) {
      auto& out = table.rows[row.at("model").get<std::string>()];
      for (const auto& [name, value] : row.at("scores").items()) out[parse_metric(name)] = value.get<double>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed score table JSON: ") + e.what(), 0);
  }
  return table;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  return parse_score_table(read_file(path), format_for_path(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace capeval
