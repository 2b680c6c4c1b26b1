#pragma once

#include <span>
#include <string>
#include <vector>

#include "capeval/core.hpp"
#include "capeval/io.hpp"

namespace capeval {

/// Normalized bag of points: weights are positive and sum to one.
class Distribution {
public:
  /// `points` is row-major, weights.size() rows of `dim` columns.
  /// Throws ValueError when the invariants do not hold.
  Distribution(std::size_t dim, std::vector<double> points, std::vector<double> weights,
               std::vector<std::string> labels = {});

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const { return {points_.data() + i * dim_, dim_}; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  /// Token of each support point; empty when built from raw points.
  const std::vector<std::string>& labels() const { return labels_; }

private:
  std::size_t dim_;
  std::vector<double> points_;
  std::vector<double> weights_;
  std::vector<std::string> labels_;
};

/// Count-normalized bag of the in-vocabulary tokens of `s`, in first-occurrence order.
/// Out-of-vocabulary tokens are dropped; throws AllOovError when none remain.
Distribution nbow(const Sentence& s, const EmbeddingTable& table);

struct Flow {
  std::size_t from;
  std::size_t to;
  double amount;
};

/// Optimal plan with the dual potentials certifying it.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Flow> flows;  // positive entries only
  double cost = 0.0;
  std::vector<double> row_potentials;  // u: u_i + v_j <= c_ij, equality on used cells
  std::vector<double> col_potentials;  // v

  double amount(std::size_t i, std::size_t j) const;
  /// Max |row sum - a_i| and |col sum - b_j|.
  double feasibility_residual(std::span<const double> a, std::span<const double> b) const;
};

struct WmdResult {
  double distance;
  TransportPlan plan;
};

/// Euclidean ground-cost matrix, row-major a.size() x b.size().
std::vector<double> ground_costs(const Distribution& a, const Distribution& b);

/// Exact optimal transport cost between two distributions under the Euclidean
/// ground metric, solved as min-cost flow by successive shortest paths.
WmdResult wmd(const Distribution& a, const Distribution& b);

/// Distance between the weighted centroids; a lower bound on wmd.
double wcd(const Distribution& a, const Distribution& b);

/// Relaxed wmd: the larger of the two one-sided nearest-neighbour costs; a lower bound on wmd.
double rwmd(const Distribution& a, const Distribution& b);

/// 1 - distance / z clamped to [0, 1]. Throws ConfigError when z <= 0.
double wmdrel(double distance, double z);
double wmdrel(const Sentence& candidate, const Sentence& mt_ref, const EmbeddingTable& table, double z);

}  // namespace capeval
