#include "capeval/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace capeval {

RankVector rank_scores(const std::map<std::string, double>& scores) {
  std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  RankVector out;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j + 1 < items.size() && items[j + 1].second == items[i].second) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[items[k].first] = mean_rank;
    i = j + 1;
  }
  return out;
}

RankVector rank_models(const ScoreTable& table, MetricKind metric) {
  return rank_scores(metric_series(table, metric).scores);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw KeyMismatch("pearson: length mismatch");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    // a constant ranking carries no order information
    return (sxx == 0.0 && syy == 0.0) ? 1.0 : 0.0;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

void paired(const RankVector& a, const RankVector& b, std::vector<double>& x, std::vector<double>& y) {
  if (a.size() != b.size()) throw KeyMismatch("rank vectors cover different model sets");
  for (const auto& [model, rank] : a.ranks) {
    auto it = b.ranks.find(model);
    if (it == b.ranks.end()) throw KeyMismatch("model \"" + model + "\" missing from second ranking");
    x.push_back(rank);
    y.push_back(it->second);
  }
  if (x.size() < 2) throw ConfigError("spearman needs at least two models");
}

}  // namespace

double spearman(const RankVector& a, const RankVector& b) {
  std::vector<double> x, y;
  paired(a, b, x, y);
  return pearson(x, y);
}

double spearman_closed_form(const RankVector& a, const RankVector& b) {
  std::vector<double> x, y;
  paired(a, b, x, y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  const auto n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

Series metric_series(const ScoreTable& table, MetricKind metric) {
  Series s{std::string(metric_name(metric)), {}};
  for (const auto& [model, row] : table.rows) {
    auto it = row.find(metric);
    if (it == row.end()) throw MissingMetric(std::string(metric_name(metric)), "model " + model);
    s.scores[model] = it->second;
  }
  return s;
}

Series sum_series(const ScoreTable& table, std::span<const MetricKind> parts) {
  Series s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s.label += "+";
    s.label += metric_name(parts[i]);
  }
  for (const auto& [model, row] : table.rows) {
    double sum = 0.0;
    for (MetricKind p : parts) {
      auto it = row.find(p);
      if (it == row.end()) throw MissingMetric(std::string(metric_name(p)), "model " + model);
      sum += it->second;
    }
    s.scores[model] = sum;
  }
  return s;
}

std::size_t CorrelationMatrix::index(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw KeyMismatch("no series labelled " + label);
  return static_cast<std::size_t>(it - labels.begin());
}

double CorrelationMatrix::at(const std::string& a, const std::string& b) const {
  return values[index(a) * labels.size() + index(b)];
}

CorrelationMatrix correlate_series(const std::vector<Series>& series, std::vector<std::string> rows,
                                   std::vector<std::string> cols) {
  CorrelationMatrix m;
  const std::size_t n = series.size();
  std::vector<RankVector> ranks;
  for (const auto& s : series) {
    m.labels.push_back(s.label);
    ranks.push_back(rank_scores(s.scores));
  }
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double rho = spearman(ranks[i], ranks[j]);
      m.values[i * n + j] = rho;
      m.values[j * n + i] = rho;
    }
  }
  m.rows = std::move(rows);
  m.cols = std::move(cols);
  for (const auto& l : m.rows) (void)m.index(l);
  for (const auto& l : m.cols) (void)m.index(l);
  return m;
}

CorrelationMatrix correlate_all(const ScoreTable& table, std::span<const MetricKind> proposed,
                                std::span<const MetricKind> standard) {
  std::vector<Series> series;
  std::vector<std::string> rows, cols;

  auto has_all = [&](MetricKind k) {
    return !table.rows.empty() &&
           std::all_of(table.rows.begin(), table.rows.end(), [&](const auto& r) { return r.second.count(k) > 0; });
  };
  auto column_or_sum = [&](MetricKind agg) {
    if (has_all(agg)) return metric_series(table, agg);
    Series s = sum_series(table, aggregate_components(agg));
    s.label = std::string(metric_name(agg));
    return s;
  };

  for (MetricKind k : standard) {
    series.push_back(metric_series(table, k));
    cols.push_back(series.back().label);
  }
  const auto bmrc_parts = aggregate_components(MetricKind::BMRC);
  const bool bmrc_ok = has_all(MetricKind::BMRC) ||
                       std::all_of(bmrc_parts.begin(), bmrc_parts.end(), [&](MetricKind k) { return has_all(k); });
  if (bmrc_ok) {
    series.push_back(column_or_sum(MetricKind::BMRC));
    cols.push_back(series.back().label);
  }

  for (MetricKind k : proposed) {
    series.push_back(metric_series(table, k));
    rows.push_back(series.back().label);
  }
  const bool all_proposed =
      std::all_of(kProposedMetrics.begin(), kProposedMetrics.end(), [&](MetricKind k) {
        return std::find(proposed.begin(), proposed.end(), k) != proposed.end();
      });
  if (all_proposed) {
    const MetricKind w = MetricKind::WMDREL, cl = MetricKind::CLINREL, cm = MetricKind::CMEDREL;
    for (auto pair : {std::array{w, cl}, std::array{w, cm}, std::array{cl, cm}}) {
      series.push_back(sum_series(table, pair));
      rows.push_back(series.back().label);
    }
    series.push_back(column_or_sum(MetricKind::WCC));
    rows.push_back(series.back().label);
  }
  return correlate_series(series, std::move(rows), std::move(cols));
}

}  // namespace capeval
