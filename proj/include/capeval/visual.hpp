#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "capeval/core.hpp"
#include "capeval/io.hpp"

namespace capeval {

/// Mean of the in-vocabulary word vectors of a sentence.
struct SentenceRepr {
  Eigen::VectorXd values;
};

SentenceRepr sentence_repr(const Sentence& s, const EmbeddingTable& table);

struct TrainingPair {
  Eigen::VectorXd input;   // sentence representation, dimension d
  Eigen::VectorXd target;  // visual feature, dimension d_v
  double weight = 1.0;
};

/// Affine map from sentence space (d) into visual feature space (d_v).
class Projector {
public:
  Projector(Eigen::MatrixXd weights, Eigen::VectorXd bias, Language language, double lambda);

  Eigen::VectorXd project(const SentenceRepr& r) const;
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  Language language() const { return language_; }
  double lambda() const { return lambda_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(weights_.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights_.rows()); }

private:
  Eigen::MatrixXd weights_;  // d_v x d
  Eigen::VectorXd bias_;     // d_v
  Language language_;
  double lambda_;
};

struct RidgeDiagnostics {
  /// max_k ||A w_k - b_k|| / ||b_k|| over output coordinates of the normal equations.
  double max_relative_residual = 0.0;
  int refinement_steps = 0;
};

/// Weighted ridge regression on inputs augmented with a constant 1 (the bias
/// coordinate is penalized like the others), solved through a Cholesky
/// factorization of the normal equations with iterative refinement.
Projector train_projector(std::span<const TrainingPair> pairs, double lambda, Language language,
                          RidgeDiagnostics* diagnostics = nullptr);

/// Mean validation squared error of each lambda under k-fold cross-validation
/// with folds drawn from a seeded shuffle; returns the best lambda.
double select_lambda(std::span<const TrainingPair> pairs, std::span<const double> grid, int folds,
                     std::uint64_t seed);

/// u.v / (|u| |v|). Throws ZeroVector when either norm is zero.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Cosine between the projected source reference and the projected candidate.
double clinrel(const Sentence& candidate, const Sentence& source_ref, const Projector& target_proj,
               const Projector& source_proj, const EmbeddingTable& target_table,
               const EmbeddingTable& source_table);

/// Cosine between the projected candidate and the image feature.
double cmedrel(const Sentence& candidate, std::span<const double> image_feature, const Projector& target_proj,
               const EmbeddingTable& target_table);

/// Header "<d> <d_v> <lambda> <language>", then d_v rows "<k> w_k1 .. w_kd bias_k".
std::string format_projector(const Projector& p);
Projector parse_projector(std::string_view text);
void save_projector(const Projector& p, const std::filesystem::path& path);
Projector load_projector(const std::filesystem::path& path);

}  // namespace capeval
