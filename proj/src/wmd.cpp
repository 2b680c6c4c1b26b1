#include "capeval/wmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace capeval {

Distribution::Distribution(std::size_t dim, std::vector<double> points, std::vector<double> weights,
                           std::vector<std::string> labels)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)), labels_(std::move(labels)) {
  if (weights_.empty()) throw ValueError("distribution has empty support");
  if (points_.size() != weights_.size() * dim_) throw ValueError("distribution points do not match weights");
  if (!labels_.empty() && labels_.size() != weights_.size()) throw ValueError("distribution labels do not match weights");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValueError("distribution weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValueError("distribution weights must sum to 1");
  for (double v : points_)
    if (!std::isfinite(v)) throw ValueError("distribution point has a non-finite component");
}

Distribution nbow(const Sentence& s, const EmbeddingTable& table) {
  std::vector<std::string> words;
  std::vector<std::size_t> counts;
  std::map<std::string, std::size_t, std::less<>> slot;
  std::size_t total = 0;
  for (const auto& tok : s.tokens()) {
    if (!table.contains(tok)) continue;
    auto [it, fresh] = slot.emplace(tok, words.size());
    if (fresh) {
      words.push_back(tok);
      counts.push_back(0);
    }
    ++counts[it->second];
    ++total;
  }
  if (total == 0) throw AllOovError(s.tokens());

  std::vector<double> points;
  points.reserve(words.size() * table.dim());
  std::vector<double> weights;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto v = *table.find(words[i]);
    points.insert(points.end(), v.begin(), v.end());
    weights.push_back(static_cast<double>(counts[i]) / static_cast<double>(total));
  }
  return Distribution(table.dim(), std::move(points), std::move(weights), std::move(words));
}

double TransportPlan::amount(std::size_t i, std::size_t j) const {
  for (const auto& f : flows)
    if (f.from == i && f.to == j) return f.amount;
  return 0.0;
}

double TransportPlan::feasibility_residual(std::span<const double> a, std::span<const double> b) const {
  std::vector<double> rs(rows, 0.0), cs(cols, 0.0);
  for (const auto& f : flows) {
    rs[f.from] += f.amount;
    cs[f.to] += f.amount;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < rows; ++i) worst = std::max(worst, std::abs(rs[i] - a[i]));
  for (std::size_t j = 0; j < cols; ++j) worst = std::max(worst, std::abs(cs[j] - b[j]));
  return worst;
}

namespace {

double euclidean(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

constexpr double kCapEps = 1e-14;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense successive-shortest-path solver on the bipartite graph
//   S -> source i (cap a_i) -> sink j (cap inf, cost c_ij) -> T (cap b_j).
class TransportSolver {
public:
  TransportSolver(std::span<const double> a, std::span<const double> b, std::span<const double> cost)
      : m_(a.size()), n_(b.size()), cost_(cost), supply_(a.begin(), a.end()), demand_(b.begin(), b.end()),
        flow_(m_ * n_, 0.0) {}

  void solve() {
    const std::size_t V = m_ + n_ + 2, S = 0, T = m_ + n_ + 1;
    std::vector<double> potential(V, 0.0), dist(V);
    std::vector<std::size_t> parent(V);
    std::vector<char> done(V);

    for (;;) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      dist[S] = 0.0;
      for (;;) {
        std::size_t u = V;
        for (std::size_t v = 0; v < V; ++v)
          if (!done[v] && dist[v] < kInf && (u == V || dist[v] < dist[u])) u = v;
        if (u == V) break;
        done[u] = 1;
        auto relax = [&](std::size_t v, double c) {
          const double nd = dist[u] + std::max(0.0, c + potential[u] - potential[v]);
          if (nd < dist[v]) {
            dist[v] = nd;
            parent[v] = u;
          }
        };
        if (u == S) {
          for (std::size_t i = 0; i < m_; ++i)
            if (supply_[i] > kCapEps) relax(source(i), 0.0);
        } else if (u <= m_) {
          const std::size_t i = u - 1;
          for (std::size_t j = 0; j < n_; ++j) relax(sink(j), cost_[i * n_ + j]);
        } else if (u < T) {
          const std::size_t j = u - 1 - m_;
          for (std::size_t i = 0; i < m_; ++i)
            if (flow_[i * n_ + j] > kCapEps) relax(source(i), -cost_[i * n_ + j]);
          if (demand_[j] > kCapEps) relax(T, 0.0);
        }
      }
      if (dist[T] == kInf) break;
      for (std::size_t v = 0; v < V; ++v)
        if (dist[v] < kInf) potential[v] += dist[v];

      double push = kInf;
      for (std::size_t v = T; v != S; v = parent[v]) push = std::min(push, residual(parent[v], v));
      for (std::size_t v = T; v != S; v = parent[v]) augment(parent[v], v, push);
    }
    cancel_negative_cycles();
  }

  TransportPlan plan() const {
    TransportPlan p;
    p.rows = m_;
    p.cols = n_;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (flow_[i * n_ + j] > 0.0) {
          p.flows.push_back({i, j, flow_[i * n_ + j]});
          p.cost += flow_[i * n_ + j] * cost_[i * n_ + j];
        }
    p.row_potentials.resize(m_);
    p.col_potentials.resize(n_);
    const auto d = shortest_labels(nullptr);
    for (std::size_t i = 0; i < m_; ++i) p.row_potentials[i] = -d[i];
    for (std::size_t j = 0; j < n_; ++j) p.col_potentials[j] = d[m_ + j];
    return p;
  }

private:
  std::size_t source(std::size_t i) const { return 1 + i; }
  std::size_t sink(std::size_t j) const { return 1 + m_ + j; }

  double residual(std::size_t u, std::size_t v) const {
    const std::size_t T = m_ + n_ + 1;
    if (u == 0) return supply_[v - 1];
    if (v == T) return demand_[u - 1 - m_];
    if (u <= m_) return kInf;                      // source -> sink
    return flow_[(v - 1) * n_ + (u - 1 - m_)];     // sink -> source (undo)
  }

  void augment(std::size_t u, std::size_t v, double amount) {
    const std::size_t T = m_ + n_ + 1;
    if (u == 0) {
      supply_[v - 1] -= amount;
    } else if (v == T) {
      demand_[u - 1 - m_] -= amount;
    } else if (u <= m_) {
      flow_[(u - 1) * n_ + (v - 1 - m_)] += amount;
    } else {
      double& f = flow_[(v - 1) * n_ + (u - 1 - m_)];
      f -= amount;
      if (f < kCapEps) f = 0.0;
    }
  }

  // Bellman-Ford labels on the residual bipartite graph from a virtual root.
  // Nodes 0..m-1 are sources, m..m+n-1 sinks. When `cycle` is non-null and a
  // negative cycle exists, it receives the cycle's node sequence.
  std::vector<double> shortest_labels(std::vector<std::size_t>* cycle) const {
    const std::size_t V = m_ + n_;
    std::vector<double> d(V, 0.0);
    std::vector<std::size_t> pred(V, V);
    std::size_t last = V;
    for (std::size_t round = 0; round <= V; ++round) {
      last = V;
      for (std::size_t i = 0; i < m_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
          const double c = cost_[i * n_ + j];
          if (d[i] + c < d[m_ + j] - 1e-13) {
            d[m_ + j] = d[i] + c;
            pred[m_ + j] = i;
            last = m_ + j;
          }
          if (flow_[i * n_ + j] > kCapEps && d[m_ + j] - c < d[i] - 1e-13) {
            d[i] = d[m_ + j] - c;
            pred[i] = m_ + j;
            last = i;
          }
        }
      if (last == V) return d;
    }
    if (cycle) {
      std::size_t v = last;
      for (std::size_t k = 0; k < V; ++k) v = pred[v];
      cycle->clear();
      std::size_t w = v;
      do {
        cycle->push_back(w);
        w = pred[w];
      } while (w != v && cycle->size() <= V);
      std::reverse(cycle->begin(), cycle->end());
    }
    return d;
  }

  // Floating-point safety net: SSP leaves no negative residual cycle in exact
  // arithmetic; round-off can, so cancel any that appear.
  void cancel_negative_cycles() {
    std::vector<std::size_t> cycle;
    for (int guard = 0; guard < 64; ++guard) {
      cycle.clear();
      shortest_labels(&cycle);
      if (cycle.size() < 2) return;
      double push = kInf;
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        const std::size_t u = cycle[k], v = cycle[(k + 1) % cycle.size()];
        if (u >= m_ && v < m_) push = std::min(push, flow_[v * n_ + (u - m_)]);
      }
      if (!(push > kCapEps) || push == kInf) return;
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        const std::size_t u = cycle[k], v = cycle[(k + 1) % cycle.size()];
        if (u < m_) flow_[u * n_ + (v - m_)] += push;
        else flow_[v * n_ + (u - m_)] -= push;
      }
    }
  }

  std::size_t m_, n_;
  std::span<const double> cost_;
  std::vector<double> supply_, demand_, flow_;
};

std::vector<double> centroid(const Distribution& d) {
  std::vector<double> c(d.dim(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto p = d.point(i);
    for (std::size_t k = 0; k < d.dim(); ++k) c[k] += d.weight(i) * p[k];
  }
  return c;
}

void check_dims(const Distribution& a, const Distribution& b) {
  if (a.dim() != b.dim()) throw ValueError("distributions live in different dimensions");
}

}  // namespace

std::vector<double> ground_costs(const Distribution& a, const Distribution& b) {
  check_dims(a, b);
  std::vector<double> c(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i * b.size() + j] = euclidean(a.point(i), b.point(j));
  return c;
}

WmdResult wmd(const Distribution& a, const Distribution& b) {
  const auto cost = ground_costs(a, b);
  TransportSolver solver(a.weights(), b.weights(), cost);
  solver.solve();
  auto plan = solver.plan();
  const double distance = plan.cost;
  return {distance, std::move(plan)};
}

double wcd(const Distribution& a, const Distribution& b) {
  check_dims(a, b);
  return euclidean(centroid(a), centroid(b));
}

double rwmd(const Distribution& a, const Distribution& b) {
  const auto cost = ground_costs(a, b);
  const std::size_t m = a.size(), n = b.size();
  double from_a = 0.0, from_b = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double best = kInf;
    for (std::size_t j = 0; j < n; ++j) best = std::min(best, cost[i * n + j]);
    from_a += a.weight(i) * best;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double best = kInf;
    for (std::size_t i = 0; i < m; ++i) best = std::min(best, cost[i * n + j]);
    from_b += b.weight(j) * best;
  }
  return std::max(from_a, from_b);
}

double wmdrel(double distance, double z) {
  if (!(z > 0.0)) throw ConfigError("WMDRel normalizer z must be positive");
  return std::clamp(1.0 - distance / z, 0.0, 1.0);
}

double wmdrel(const Sentence& candidate, const Sentence& mt_ref, const EmbeddingTable& table, double z) {
  if (!(z > 0.0)) throw ConfigError("WMDRel normalizer z must be positive");
  return wmdrel(wmd(nbow(candidate, table), nbow(mt_ref, table)).distance, z);
}

}  // namespace capeval
