#include "steinshrink/estimation.hpp"

#include "util.hpp"

#include <algorithm>
#include <cmath>

namespace steinshrink {

namespace {

// Coordinates where the soft-threshold shift has derivative -1. At lambda = 0
// the estimator is the identity, so no coordinate counts.
bool thresholded(double v, double lambda) { return lambda > 0.0 && std::abs(v) <= lambda; }

double checked_norm2(const Vec& x, double lambda, bool define_zero, bool& zero) {
  const double s = x.squaredNorm();
  zero = false;
  if (lambda > 0.0 && s <= kSingularNorm2) {
    if (!define_zero) throw NumericalGuardError("shrinkage evaluated at ||x||^2 <= 1e-12");
    zero = true;
  }
  return s;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be finite and >= 0");
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Identity: return "identity";
    case EstimatorKind::JamesStein: return "james-stein";
    case EstimatorKind::SoftThreshold: return "soft-threshold";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "identity") return EstimatorKind::Identity;
  if (text == "james-stein" || text == "js") return EstimatorKind::JamesStein;
  if (text == "soft-threshold" || text == "st") return EstimatorKind::SoftThreshold;
  throw ParameterError("unknown estimator '" + text + "'");
}

EstimatorSpec EstimatorSpec::james_stein(double lambda, bool define_zero) {
  check_lambda(lambda);
  return {EstimatorKind::JamesStein, lambda, define_zero};
}

EstimatorSpec EstimatorSpec::soft_threshold(double lambda) {
  check_lambda(lambda);
  return {EstimatorKind::SoftThreshold, lambda, false};
}

std::string EstimatorSpec::name() const {
  if (kind == EstimatorKind::Identity) return "identity";
  return to_string(kind) + "(" + std::to_string(lambda) + ")";
}

Vec EstimatorSpec::apply(const Vec& x) const {
  switch (kind) {
    case EstimatorKind::Identity: return x;
    case EstimatorKind::JamesStein: return steinshrink::james_stein(x, lambda, define_zero);
    case EstimatorKind::SoftThreshold: return steinshrink::soft_threshold(x, lambda);
  }
  return x;
}

Vec EstimatorSpec::shift(const Vec& x) const {
  switch (kind) {
    case EstimatorKind::Identity: return Vec::Zero(x.size());
    case EstimatorKind::JamesStein: {
      bool zero = false;
      const double s = checked_norm2(x, lambda, define_zero, zero);
      if (zero || lambda == 0.0) return Vec::Zero(x.size());
      return (-lambda / s) * x;
    }
    case EstimatorKind::SoftThreshold: return steinshrink::soft_threshold(x, lambda) - x;
  }
  return Vec::Zero(x.size());
}

double EstimatorSpec::partial(const Vec& x, int i, int j) const {
  switch (kind) {
    case EstimatorKind::Identity: return 0.0;
    case EstimatorKind::JamesStein: {
      bool zero = false;
      const double s = checked_norm2(x, lambda, define_zero, zero);
      if (zero || lambda == 0.0) return 0.0;
      return -lambda * ((i == j ? 1.0 / s : 0.0) - 2.0 * x(i) * x(j) / (s * s));
    }
    case EstimatorKind::SoftThreshold:
      return (i == j && thresholded(x(i), lambda)) ? -1.0 : 0.0;
  }
  return 0.0;
}

Mat EstimatorSpec::jacobian(const Vec& x) const {
  const auto d = x.size();
  switch (kind) {
    case EstimatorKind::Identity: return Mat::Zero(d, d);
    case EstimatorKind::JamesStein: {
      bool zero = false;
      const double s = checked_norm2(x, lambda, define_zero, zero);
      if (zero || lambda == 0.0) return Mat::Zero(d, d);
      Mat J = Mat::Identity(d, d) * (-lambda / s);
      J.noalias() += (2.0 * lambda / (s * s)) * x * x.transpose();
      return J;
    }
    case EstimatorKind::SoftThreshold: {
      Vec diag(d);
      for (Eigen::Index i = 0; i < d; ++i) diag(i) = thresholded(x(i), lambda) ? -1.0 : 0.0;
      return diag.asDiagonal();
    }
  }
  return Mat::Zero(d, d);
}

double EstimatorSpec::divergence(const Vec& x) const {
  const auto d = static_cast<double>(x.size());
  switch (kind) {
    case EstimatorKind::Identity: return 0.0;
    case EstimatorKind::JamesStein: {
      bool zero = false;
      const double s = checked_norm2(x, lambda, define_zero, zero);
      if (zero || lambda == 0.0) return 0.0;
      return -lambda * (d - 2.0) / s;
    }
    case EstimatorKind::SoftThreshold:
      return lambda > 0.0 ? -static_cast<double>((x.array().abs() <= lambda).count()) : 0.0;
  }
  return 0.0;
}

VectorField EstimatorSpec::field() const {
  VectorField f;
  f.name = name();
  f.singular_at_origin = kind == EstimatorKind::JamesStein && lambda > 0.0 && !define_zero;
  const EstimatorSpec self = *this;
  f.value = [self](const Vec& x) { return self.shift(x); };
  f.jacobian = [self](const Vec& x) { return self.jacobian(x); };
  f.partial = [self](const Vec& x, int i, int j) { return self.partial(x, i, j); };
  return f;
}

Vec james_stein(const Vec& x, double lambda, bool define_zero) {
  check_lambda(lambda);
  if (lambda == 0.0) return x;
  bool zero = false;
  const double s = checked_norm2(x, lambda, define_zero, zero);
  if (zero) return Vec::Zero(x.size());
  return x * (1.0 - lambda / s);
}

Vec soft_threshold(const Vec& x, double lambda) {
  check_lambda(lambda);
  return x.unaryExpr([lambda](double v) {
    const double m = std::abs(v) - lambda;
    return m > 0.0 ? std::copysign(m, v) : 0.0;
  });
}

double sure(const Vec& x, const EstimatorSpec& estimator, const Mat& sigma) {
  if (sigma.rows() != x.size() || sigma.cols() != x.size()) throw ParameterError("sigma must be d x d");
  const double tr = sigma.trace();
  switch (estimator.kind) {
    case EstimatorKind::Identity: return tr;
    case EstimatorKind::JamesStein: {
      const double lambda = estimator.lambda;
      bool zero = false;
      const double s = checked_norm2(x, lambda, estimator.define_zero, zero);
      if (zero || lambda == 0.0) return tr;
      const double weighted = tr / s - 2.0 * x.dot(sigma * x) / (s * s);
      return tr + lambda * lambda / s - 2.0 * lambda * weighted;
    }
    case EstimatorKind::SoftThreshold: {
      const double lambda = estimator.lambda;
      double total = tr;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double a = std::abs(x(i));
        total += std::min(a * a, lambda * lambda);
        if (thresholded(a, lambda)) total -= 2.0 * sigma(i, i);
      }
      return total;
    }
  }
  return tr;
}

double sure(const Vec& x, const EstimatorSpec& estimator, double sigma2) {
  const auto d = static_cast<double>(x.size());
  switch (estimator.kind) {
    case EstimatorKind::Identity: return d * sigma2;
    case EstimatorKind::JamesStein: {
      const double lambda = estimator.lambda;
      bool zero = false;
      const double s = checked_norm2(x, lambda, estimator.define_zero, zero);
      if (zero || lambda == 0.0) return d * sigma2;
      return d * sigma2 + lambda * (lambda - 2.0 * sigma2 * (d - 2.0)) / s;
    }
    case EstimatorKind::SoftThreshold: {
      const double l2 = estimator.lambda * estimator.lambda;
      double total = d * sigma2;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double x2 = x(i) * x(i);
        total += std::min(x2, l2);
        if (thresholded(x(i), estimator.lambda)) total -= 2.0 * sigma2;
      }
      return total;
    }
  }
  return d * sigma2;
}

double sure_kernel(const Vec& x, const EstimatorSpec& estimator, const KernelValue& t, const Mat& sigma) {
  const double tr = sigma.trace();
  switch (estimator.kind) {
    case EstimatorKind::Identity: return tr;
    case EstimatorKind::JamesStein: {
      const double lambda = estimator.lambda;
      bool zero = false;
      const double s = checked_norm2(x, lambda, estimator.define_zero, zero);
      if (zero || lambda == 0.0) return tr;
      const double weighted = t.trace() / s - 2.0 * t.quadratic(x) / (s * s);
      return tr + lambda * lambda / s - 2.0 * lambda * weighted;
    }
    case EstimatorKind::SoftThreshold: {
      const Vec f = estimator.shift(x);
      return tr + f.squaredNorm() + 2.0 * t.contract(estimator.field(), x);
    }
  }
  return tr;
}

double sure_kernel(const Vec& x, const Vec& theta, const EstimatorSpec& estimator, const SteinKernel& kernel) {
  if (x.size() != kernel.dim() || theta.size() != kernel.dim()) throw ParameterError("dimension mismatch");
  return sure_kernel(x, estimator, kernel.evaluate(x - theta), kernel.mean());
}

RiskReport sure_zero_bias_mean(const NoiseModel& model, const EstimatorSpec& estimator,
                               const ZeroBiasCoupling& coupling, std::size_t n, std::uint64_t seed) {
  if (coupling.dim() != model.dim()) throw ParameterError("coupling and model dimensions differ");
  const Mat law_cov = model.law().covariance();
  if (!law_cov.isApprox(coupling.sigma(), 1e-9)) throw ParameterError("coupling does not belong to the model's law");
  const Vec& theta = model.theta();
  const double tr = coupling.sigma().trace();
  const VectorField f = estimator.field();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    ZeroBiasDraw draw;
    coupling.draw(rng, draw);
    const Vec x = theta + draw.y;
    if (f.singular_at_origin && x.squaredNorm() <= kSingularNorm2) return false;
    double weighted = 0.0;
    if (!zb_weighted_partials(coupling, draw, theta, f, weighted)) return false;
    out[0] = tr + f.value(x).squaredNorm() + 2.0 * weighted;
    return true;
  });
  return result.stats.report(0, seed, "sure-zero-bias:" + estimator.name());
}

std::vector<double> LambdaGrid::points(int d) const {
  if (!(c > 0.0) || size < 2 || d < 2) throw ParameterError("lambda grid needs C > 0, size >= 2 and d >= 2");
  const double top = std::sqrt(c * std::log(static_cast<double>(d)));
  std::vector<double> out(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) out[static_cast<std::size_t>(i)] = top * i / (size - 1);
  return out;
}

LambdaGrid LambdaGrid::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ParameterError("lambda grid must look like C:size");
  LambdaGrid grid;
  grid.c = detail::parse_double(text.substr(0, colon), "lambda grid C");
  const double size = detail::parse_double(text.substr(colon + 1), "lambda grid size");
  if (size != std::floor(size) || size < 2 || size > 1e7) throw ParameterError("lambda grid size must be an integer >= 2");
  grid.size = static_cast<int>(size);
  if (!(grid.c > 0.0)) throw ParameterError("lambda grid C must be positive");
  return grid;
}

namespace {

void check_grid(const std::vector<double>& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw ParameterError("lambda grid values must be >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw ParameterError("lambda grid must be increasing");
  }
}

}  // namespace

std::vector<double> soft_threshold_sure_path(const Vec& x, double sigma2, const std::vector<double>& grid) {
  check_grid(grid);
  std::vector<double> a(x.data(), x.data() + x.size());
  for (auto& v : a) v = std::abs(v);
  std::sort(a.begin(), a.end());
  const auto d = a.size();
  std::vector<double> out(grid.size());
  // Coordinates with |x_i| <= lambda contribute x_i^2 - 2 sigma2, the rest lambda^2.
  std::size_t below = 0;
  double below_sq = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double lambda = grid[g];
    while (below < d && lambda > 0.0 && a[below] <= lambda) {
      below_sq += a[below] * a[below];
      ++below;
    }
    out[g] = static_cast<double>(d) * sigma2 + below_sq + lambda * lambda * static_cast<double>(d - below) -
             2.0 * sigma2 * static_cast<double>(below);
  }
  return out;
}

std::vector<double> soft_threshold_loss_path(const Vec& x, const Vec& theta, const std::vector<double>& grid) {
  check_grid(grid);
  if (x.size() != theta.size()) throw ParameterError("x and theta dimensions differ");
  const auto d = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(x(static_cast<Eigen::Index>(l))) < std::abs(x(static_cast<Eigen::Index>(r)));
  });
  // Above the threshold: (x_i - theta_i - sgn(x_i) lambda)^2
  //   = (x_i - theta_i)^2 - 2 lambda sgn(x_i)(x_i - theta_i) + lambda^2.
  double above_sq = 0.0;
  double above_lin = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double r = x(static_cast<Eigen::Index>(i)) - theta(static_cast<Eigen::Index>(i));
    above_sq += r * r;
    above_lin += std::copysign(1.0, x(static_cast<Eigen::Index>(i))) * r;
  }
  double below_theta = 0.0;
  std::size_t below = 0;
  std::vector<double> out(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double lambda = grid[g];
    while (below < d) {
      const auto i = static_cast<Eigen::Index>(order[below]);
      if (std::abs(x(i)) > lambda) break;
      const double r = x(i) - theta(i);
      above_sq -= r * r;
      above_lin -= std::copysign(1.0, x(i)) * r;
      below_theta += theta(i) * theta(i);
      ++below;
    }
    out[g] = below_theta + above_sq - 2.0 * lambda * above_lin + lambda * lambda * static_cast<double>(d - below);
  }
  return out;
}

LambdaChoice select_lambda(const Vec& x, double sigma2, const std::vector<double>& grid, EstimatorKind kind) {
  if (grid.empty()) throw ParameterError("empty lambda grid");
  if (!(sigma2 > 0.0)) throw ParameterError("sigma2 must be positive");
  std::vector<double> values;
  switch (kind) {
    case EstimatorKind::Identity:
      values.assign(grid.size(), static_cast<double>(x.size()) * sigma2);
      break;
    case EstimatorKind::SoftThreshold:
      values = soft_threshold_sure_path(x, sigma2, grid);
      break;
    case EstimatorKind::JamesStein:
      check_grid(grid);
      values.reserve(grid.size());
      for (double lambda : grid) values.push_back(sure(x, EstimatorSpec::james_stein(lambda), sigma2));
      break;
  }
  // std::min_element returns the first minimizer, i.e. the smallest lambda.
  const auto best = std::min_element(values.begin(), values.end());
  const auto index = static_cast<std::size_t>(best - values.begin());
  return {grid[index], *best, index};
}

LambdaChoice select_lambda(const Vec& x, double sigma2, const LambdaGrid& grid, EstimatorKind kind) {
  return select_lambda(x, sigma2, grid.points(static_cast<int>(x.size())), kind);
}

}  // namespace steinshrink
