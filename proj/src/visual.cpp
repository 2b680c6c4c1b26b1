#include "capeval/visual.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

namespace capeval {

SentenceRepr sentence_repr(const Sentence& s, const EmbeddingTable& table) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dim()));
  std::size_t count = 0;
  for (const auto& tok : s.tokens()) {
    auto v = table.find(tok);
    if (!v) continue;
    sum += Eigen::Map<const Eigen::VectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
    ++count;
  }
  if (count == 0) throw AllOovError(s.tokens());
  return {sum / static_cast<double>(count)};
}

Projector::Projector(Eigen::MatrixXd weights, Eigen::VectorXd bias, Language language, double lambda)
    : weights_(std::move(weights)), bias_(std::move(bias)), language_(language), lambda_(lambda) {
  if (bias_.size() != weights_.rows()) throw ValueError("projector bias does not match weight rows");
  if (!weights_.allFinite() || !bias_.allFinite()) throw ValueError("projector has non-finite parameters");
}

Eigen::VectorXd Projector::project(const Eigen::VectorXd& x) const {
  if (x.size() != weights_.cols())
    throw ValueError("projector expects dimension " + std::to_string(weights_.cols()) + ", got " +
                     std::to_string(x.size()));
  return weights_ * x + bias_;
}

Eigen::VectorXd Projector::project(const SentenceRepr& r) const { return project(r.values); }

namespace {

struct NormalEquations {
  Eigen::MatrixXd lhs;  // (d+1) x (d+1)
  Eigen::MatrixXd rhs;  // (d+1) x d_v
};

NormalEquations normal_equations(std::span<const TrainingPair> pairs, double lambda) {
  const auto d = pairs.front().input.size();
  const auto dv = pairs.front().target.size();
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd X(n, d + 1), Y(n, dv);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    if (p.input.size() != d || p.target.size() != dv) throw ValueError("training pairs have mixed dimensions");
    if (!(p.weight > 0.0) || !std::isfinite(p.weight)) throw ValueError("training pair weight must be positive");
    X.row(i).head(d) = p.input.transpose();
    X(i, d) = 1.0;
    Y.row(i) = p.target.transpose();
    w(i) = p.weight;
  }
  NormalEquations eq;
  eq.lhs = X.transpose() * w.asDiagonal() * X;
  eq.lhs.diagonal().array() += lambda;
  eq.rhs = X.transpose() * w.asDiagonal() * Y;
  return eq;
}

double max_relative_residual(const NormalEquations& eq, const Eigen::MatrixXd& sol) {
  const Eigen::MatrixXd r = eq.rhs - eq.lhs * sol;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    const double denom = eq.rhs.col(k).norm();
    const double res = r.col(k).norm();
    worst = std::max(worst, denom > 0.0 ? res / denom : res);
  }
  return worst;
}

}  // namespace

Projector train_projector(std::span<const TrainingPair> pairs, double lambda, Language language,
                          RidgeDiagnostics* diagnostics) {
  if (pairs.empty()) throw ConfigError("cannot train a projector from zero pairs");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("ridge lambda must be positive");

  const auto eq = normal_equations(pairs, lambda);
  Eigen::LLT<Eigen::MatrixXd> llt(eq.lhs);
  if (llt.info() != Eigen::Success) throw ValueError("normal equations are not positive definite");
  Eigen::MatrixXd sol = llt.solve(eq.rhs);

  RidgeDiagnostics diag;
  diag.max_relative_residual = max_relative_residual(eq, sol);
  while (diag.max_relative_residual > 1e-12 && diag.refinement_steps < 3) {
    sol += llt.solve(eq.rhs - eq.lhs * sol);
    ++diag.refinement_steps;
    diag.max_relative_residual = max_relative_residual(eq, sol);
  }
  if (diagnostics) *diagnostics = diag;

  const auto d = pairs.front().input.size();
  Eigen::MatrixXd weights = sol.topRows(d).transpose();
  Eigen::VectorXd bias = sol.row(d).transpose();
  return Projector(std::move(weights), std::move(bias), language, lambda);
}

double select_lambda(std::span<const TrainingPair> pairs, std::span<const double> grid, int folds,
                     std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("empty lambda grid");
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (pairs.size() < 2) throw ConfigError("cross-validation needs at least two pairs");
  const auto k = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(folds), pairs.size()));

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  double best_lambda = grid.front(), best_err = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    double err = 0.0;
    std::size_t count = 0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<TrainingPair> train, held;
      for (std::size_t i = 0; i < order.size(); ++i)
        (i % k == f ? held : train).push_back(pairs[order[i]]);
      const auto p = train_projector(train, lambda, Language::target);
      for (const auto& h : held) {
        err += (p.project(h.input) - h.target).squaredNorm();
        ++count;
      }
    }
    err /= static_cast<double>(count);
    if (err < best_err) {
      best_err = err;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValueError("cosine of vectors with different dimensions");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroVector();
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return cosine(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

double clinrel(const Sentence& candidate, const Sentence& source_ref, const Projector& target_proj,
               const Projector& source_proj, const EmbeddingTable& target_table,
               const EmbeddingTable& source_table) {
  const auto vs = source_proj.project(sentence_repr(source_ref, source_table));
  const auto vt = target_proj.project(sentence_repr(candidate, target_table));
  return cosine(vs, vt);
}

double cmedrel(const Sentence& candidate, std::span<const double> image_feature, const Projector& target_proj,
               const EmbeddingTable& target_table) {
  const auto vt = target_proj.project(sentence_repr(candidate, target_table));
  return cosine(std::span<const double>(vt.data(), static_cast<std::size_t>(vt.size())), image_feature);
}

namespace {

std::string real_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T number(std::string_view s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("not a number: \"" + std::string(s) + "\"", line);
  return v;
}

}  // namespace

std::string format_projector(const Projector& p) {
  const auto d = p.input_dim(), dv = p.output_dim();
  std::string out = std::to_string(d) + " " + std::to_string(dv) + " " + real_text(p.lambda()) + " " +
                    std::string(language_name(p.language())) + "\n";
  for (std::size_t k = 0; k < dv; ++k) {
    out += std::to_string(k);
    for (std::size_t c = 0; c < d; ++c)
      out += " " + real_text(p.weights()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)));
    out += " " + real_text(p.bias()(static_cast<Eigen::Index>(k)));
    out += "\n";
  }
  return out;
}

Projector parse_projector(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  while (!lines.empty() && fields_of(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("empty projector file", 1);

  const auto head = fields_of(lines[0]);
  if (head.size() != 4) throw FormatError("projector header must be \"<d> <d_v> <lambda> <language>\"", 1);
  const auto d = number<std::size_t>(head[0], 1);
  const auto dv = number<std::size_t>(head[1], 1);
  const double lambda = number<double>(head[2], 1);
  const Language lang = parse_language(head[3]);
  if (d == 0 || dv == 0) throw FormatError("projector dimensions must be positive", 1);
  if (lines.size() != dv + 1)
    throw FormatError("expected " + std::to_string(dv) + " weight rows", std::min(lines.size(), dv + 1) + 1);

  Eigen::MatrixXd w(static_cast<Eigen::Index>(dv), static_cast<Eigen::Index>(d));
  Eigen::VectorXd b(static_cast<Eigen::Index>(dv));
  for (std::size_t k = 0; k < dv; ++k) {
    const std::size_t lineno = k + 2;
    const auto f = fields_of(lines[k + 1]);
    if (f.size() != d + 2)
      throw FormatError("expected " + std::to_string(d + 2) + " fields, found " + std::to_string(f.size()), lineno);
    for (std::size_t c = 0; c < d; ++c)
      w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = number<double>(f[c + 1], lineno);
    b(static_cast<Eigen::Index>(k)) = number<double>(f[d + 1], lineno);
  }
  return Projector(std::move(w), std::move(b), lang, lambda);
}

void save_projector(const Projector& p, const std::filesystem::path& path) { write_file(path, format_projector(p)); }

Projector load_projector(const std::filesystem::path& path) { return parse_projector(read_file(path)); }

}  // namespace capeval
