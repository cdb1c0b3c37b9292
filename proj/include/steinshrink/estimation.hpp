#pragma once

#include "steinshrink/core.hpp"
#include "steinshrink/monte_carlo.hpp"
#include "steinshrink/noise_models.hpp"
#include "steinshrink/stein_kernels.hpp"
#include "steinshrink/vector_fields.hpp"
#include "steinshrink/zero_bias.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace steinshrink {

enum class EstimatorKind { Identity, JamesStein, SoftThreshold };

std::string to_string(EstimatorKind kind);
/// Accepts "identity", "james-stein" (or "js") and "soft-threshold" (or "st").
EstimatorKind parse_estimator_kind(const std::string& text);

/// Estimator S(x) = x + f(x).
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Identity;
  double lambda = 0.0;
  /// Map x = 0 to S(0) = 0 instead of raising NumericalGuardError
  /// (James-Stein only).
  bool define_zero = false;

  static EstimatorSpec identity() { return {}; }
  static EstimatorSpec james_stein(double lambda, bool define_zero = false);
  static EstimatorSpec soft_threshold(double lambda);

  std::string name() const;
  Vec apply(const Vec& x) const;
  /// f(x) = S(x) - x.
  Vec shift(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
  double partial(const Vec& x, int i, int j) const;
  double divergence(const Vec& x) const;
  /// f as a vector field, for use in the identity checks.
  VectorField field() const;
};

/// x (1 - lambda/||x||^2).
Vec james_stein(const Vec& x, double lambda, bool define_zero = false);
/// sgn(x_i)(|x_i| - lambda)_+ coordinatewise.
Vec soft_threshold(const Vec& x, double lambda);

/// Tr Sigma + ||f(x)||^2 + 2 sum_ij sigma_ij d_j f_i(x).
double sure(const Vec& x, const EstimatorSpec& estimator, const Mat& sigma);
/// Same with Sigma = sigma2 Id, using the closed forms.
double sure(const Vec& x, const EstimatorSpec& estimator, double sigma2);
/// Tr Sigma + ||f(x)||^2 + 2 <T(x - theta), grad f(x)>. Needs theta, so it is
/// only usable where theta is known (Monte Carlo validation).
double sure_kernel(const Vec& x, const Vec& theta, const EstimatorSpec& estimator, const SteinKernel& kernel);
/// Joint-draw version for kernels without a pointwise form: the caller
/// supplies T drawn jointly with x - theta.
double sure_kernel(const Vec& x, const EstimatorSpec& estimator, const KernelValue& t, const Mat& sigma);

/// Monte Carlo estimate of Tr Sigma + E||f(X)||^2 + 2 sum_ij sigma_ij E[d_j f_i(X^{ij})].
RiskReport sure_zero_bias_mean(const NoiseModel& model, const EstimatorSpec& estimator,
                               const ZeroBiasCoupling& coupling, std::size_t n, std::uint64_t seed);

/// Uniform grid on [0, sqrt(C log d)].
struct LambdaGrid {
  double c = 2.0;
  int size = 512;

  std::vector<double> points(int d) const;
  /// Parses "C:size".
  static LambdaGrid parse(const std::string& text);
};

/// Soft-threshold SURE at every grid point (sigma2 Id covariance), by one
/// sort of |x| and a sweep over the increasing grid.
std::vector<double> soft_threshold_sure_path(const Vec& x, double sigma2, const std::vector<double>& grid);
/// Loss ||S_lambda(x) - theta||^2 of soft thresholding at every grid point.
std::vector<double> soft_threshold_loss_path(const Vec& x, const Vec& theta, const std::vector<double>& grid);

struct LambdaChoice {
  double lambda = 0.0;
  double sure = 0.0;
  std::size_t index = 0;
};

/// Smallest grid minimizer of SURE.
LambdaChoice select_lambda(const Vec& x, double sigma2, const LambdaGrid& grid, EstimatorKind kind);
LambdaChoice select_lambda(const Vec& x, double sigma2, const std::vector<double>& grid, EstimatorKind kind);

}  // namespace steinshrink
