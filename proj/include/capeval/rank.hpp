#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "capeval/core.hpp"

namespace capeval {

/// model id -> rank, 1 = best. Tied scores share the mean of the ranks they span.
struct RankVector {
  std::map<std::string, double> ranks;

  std::size_t size() const { return ranks.size(); }
  double operator[](const std::string& model) const { return ranks.at(model); }
};

/// Descending-score ranking with average ranks for exact ties.
RankVector rank_scores(const std::map<std::string, double>& scores);

/// Ranks every model of `table` by `metric`; throws MissingMetric if a row lacks it.
RankVector rank_models(const ScoreTable& table, MetricKind metric);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of the two rank vectors, which is tie-safe.
/// Throws KeyMismatch for differing model sets and ConfigError when n < 2.
double spearman(const RankVector& a, const RankVector& b);

/// 1 - 6 sum(d^2) / (n (n^2 - 1)). Only valid without ties.
double spearman_closed_form(const RankVector& a, const RankVector& b);

/// A named per-model score series: a metric column or a sum of columns.
struct Series {
  std::string label;
  std::map<std::string, double> scores;
};

Series metric_series(const ScoreTable& table, MetricKind metric);
Series sum_series(const ScoreTable& table, std::span<const MetricKind> parts);

/// Symmetric Spearman matrix over a set of series, plus the rows x columns block
/// selected for reporting (proposed metrics against standard metrics).
struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // labels.size()^2, row-major
  std::vector<std::string> rows;
  std::vector<std::string> cols;

  std::size_t index(const std::string& label) const;
  double at(const std::string& a, const std::string& b) const;
};

CorrelationMatrix correlate_series(const std::vector<Series>& series, std::vector<std::string> rows,
                                   std::vector<std::string> cols);

/// Proposed metrics plus their combinations (pairwise sums, then WCC) against
/// the standard metrics and BMRC. Combination rows are produced only when all
/// three proposed metrics are present; BMRC and WCC use stored values when the
/// table has them, otherwise the component sums.
CorrelationMatrix correlate_all(const ScoreTable& table, std::span<const MetricKind> proposed,
                                std::span<const MetricKind> standard);

}  // namespace capeval
