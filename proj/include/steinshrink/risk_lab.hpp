#pragma once

#include "steinshrink/estimation.hpp"
#include "steinshrink/monte_carlo.hpp"
#include "steinshrink/noise_models.hpp"
#include "steinshrink/stein_kernels.hpp"
#include "steinshrink/zero_bias.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace steinshrink {

// ---------------------------------------------------------------------------
// Monte Carlo risk
// ---------------------------------------------------------------------------

/// E||S(X) - theta||^2.
RiskReport mc_risk(const NoiseModel& model, const EstimatorSpec& estimator, std::size_t n, std::uint64_t seed);
/// E[||S(X) - theta||^2 - ||X - theta||^2] from the same draws.
RiskReport mc_excess_risk(const NoiseModel& model, const EstimatorSpec& estimator, std::size_t n,
                          std::uint64_t seed);
RiskReport mc_excess_risk(const NoiseModel& model, double lambda, std::size_t n, std::uint64_t seed);
/// E[SURE(X)] - E||S(X) - theta||^2 from the same draws, SURE computed with
/// the model's covariance.
RiskReport sure_bias(const NoiseModel& model, const EstimatorSpec& estimator, std::size_t n, std::uint64_t seed);

/// E[1/||X||^2].
RiskReport mc_e_inv2(const NoiseModel& model, std::size_t n, std::uint64_t seed);
/// E[d^2 ||X||^-4].
RiskReport mc_e_d2_inv4(const NoiseModel& model, std::size_t n, std::uint64_t seed);
/// E[(d/||X||^2)^m].
RiskReport mc_inverse_moment(const NoiseModel& model, int m, std::size_t n, std::uint64_t seed);
/// d^3 E||X||^-6, reported as a measured diagnostic.
RiskReport inverse_norm6_diagnostic(const NoiseModel& model, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Risk bounds
// ---------------------------------------------------------------------------

/// Inputs to the analytic bounds. Unset optionals make the bounds that need
/// them throw ParameterError.
struct BoundInputs {
  double lambda = 0.0;
  int d = 0;
  double trace_sigma = 0.0;
  double kappa = 0.0;
  std::optional<double> alpha_minus;
  std::optional<double> alpha_plus;
  std::optional<double> e_inv2;
  std::optional<double> e_d2_inv4;
  /// e_d2_inv4 is itself an upper bound rather than an estimate.
  bool e_d2_inv4_is_bound = false;
  std::optional<DiscrepancyStats> discrepancy;
  std::optional<double> c4;
  std::optional<double> c8;
  std::optional<double> c_minus2;
  std::optional<double> c_minus4;
  std::optional<double> cp;

  /// Throws ParameterError when a set constant is not positive or
  /// alpha_minus > alpha_plus.
  void validate() const;
  /// Names of inputs that are bounds rather than estimates ("bound-input").
  std::vector<std::string> bound_input_labels() const;
};

/// Tr Sigma - lambda e_inv2 (2 d alpha_- - 4 alpha_+ - lambda).
double bound_kernel_range(const BoundInputs& in);
/// Smallest d with a nonempty improvement window: 1 + floor(2 alpha_+/alpha_-).
int improvement_dimension(double alpha_minus, double alpha_plus);

/// (lambda/d) sqrt(e_d2_inv4) (sqrt Var Tr T + 2 sqrt E||T - Sigma||^2).
double b_lambda(const BoundInputs& in);
/// Tr Sigma + lambda e_inv2 (lambda - 2(Tr Sigma - 2 kappa)) + 2 B_lambda.
double bound_discrepancy(const BoundInputs& in);
/// Tr Sigma + lambda e_inv2 (lambda - 2(Tr Sigma - 2 kappa)) + 2 B*_lambda.
double bound_zb(const BoundInputs& in, double b_star);

/// Monte Carlo estimate of
/// B*_lambda = lambda |E sum_ij sigma_ij [d_j g0_i(X^{ij}) - d_j g0_i(X)]|.
RiskReport bound_b_star(const NoiseModel& model, const ZeroBiasCoupling& coupling, double lambda, std::size_t n,
                        std::uint64_t seed);

struct BStarClosedInputs {
  double lambda = 0.0;
  int d = 0;
  double sigma2 = 0.0;
  double c4 = 0.0;
  double c8 = 0.0;
  double c_minus2 = 0.0;
  double c_minus4 = 0.0;
  double theta_norm1 = 0.0;
  double theta_norm2_sq = 0.0;
  /// sum_i |Cov((X_i - theta_i)^2, ||X^{-i}||^-2)|; zero for product models.
  double cov_sum = 0.0;
};

/// lambda cov_sum + (6 lambda sqrt(c_-4)/d^2)(d(sigma^2 sqrt(c4) + sqrt(c8)/3) + ||theta||^2 (sigma^2 + c4)).
double bound_b_star_closed(const BStarClosedInputs& in);
/// (25 c_-2 lambda/(8 d^2))(d c4/3 + c4^{3/4} ||theta||_1 + 2 sigma^2 ||theta||_2^2 + d sigma^4),
/// for mixtures of laws with independent coordinates.
double bound_b_star_mixture(const BStarClosedInputs& in);

/// Covariance-term bound for components with dependency neighborhoods of
/// size eta: 8 eta [(c8 + sigma^8)(c8 + ||theta||_inf^8)]^{1/4} / (d - eta)^2.
double local_dependence_cov_bound(int eta, int d, double c8, double sigma2, double theta_inf);

struct InverseMomentBound {
  double bound = 0.0;
  bool valid = false;
};

/// E[(d/S_d)^m] <= C (2/mu)^m, valid when d >= 2m/q.
InverseMomentBound inverse_moment_bound(double C, double mu, double q, int m, int d);

/// 1/(||theta||^2 + Tr Sigma), a lower bound on E[1/||X||^2].
double jensen_lower(const Vec& theta, double trace_sigma);

/// Closed-form quantities for the Student law with k degrees of freedom and
/// dispersion k/(k-2) (the instance with Ups = Id), d even.
struct StudentConstants {
  int d = 0;
  double k = 0.0;
  double lambda = 0.0;
  double e_d2_inv4_bound = 0.0;  // bound-input
  double var_trace_T = 0.0;
  double e_frob_T_minus_Sigma_sq = 0.0;
  /// 24 lambda sqrt(2 d^2 (k+2) / ((d-2)(d-4)(d+k-2) k (k-4))).
  double kernel_excess_bound = 0.0;
  /// 2 B_lambda assembled from the three quantities above.
  double kernel_excess_from_constants = 0.0;
  /// 16 lambda (d+k-2) / ((d-2) k).
  double zero_bias_excess_bound = 0.0;
};

StudentConstants student_constants(int d, double k, double lambda);

/// sigma^2 c^2 / (sigma^2 + c^2).
double pinsker_limit(double sigma2, double c2);

/// d s - (d-2)^2 s^2 / (||theta||^2 + d s) + 2 B_lambda with s = sigma^2/d.
double adaptivity_bound_kernel(double theta_norm2, double sigma2, int d, double b_lambda_value);
/// sigma^2 ||theta||^2/(sigma^2 + ||theta||^2) (1 + 4 sigma^2/(d ||theta||^2))
///   + L lambda (1/d + ||theta||_1/d^2 + ||theta||_2^2/d^3), lambda = (d-2) sigma^2/d.
double adaptivity_bound_zero_bias(const Vec& theta, double sigma2, int d, double L);

/// Uniform-on-sphere law with ||theta||^2 in [c sigma^2 d, C sigma^2 d] and
/// lambda in [0, 2 sigma^2 (d-2)]. At lambda = sigma^2 (d-2):
///   gain_term         = -sigma^2 (d-2)^2 / ((sqrt C + 1)^2 d)
///   two_b_star_closed = 4 sigma^2 (d-2)^2 / ((sqrt c - 1)^3 d^2).
struct SphereComparison {
  double lambda = 0.0;
  double gain_term = 0.0;
  double two_b_star_closed = 0.0;
  bool improves = false;  // gain_term + two_b_star_closed < 0
};

/// lambda defaults to sigma^2 (d-2).
SphereComparison sphere_comparison(int d, double sigma2, double c_low, double c_high,
                                   std::optional<double> lambda = std::nullopt);
/// Dimension above which the sphere comparison certifies improvement:
/// 4 (sqrt C + 1)^2 / (sqrt c - 1)^3.
double sphere_crossing_dimension(double c_low, double c_high);

}  // namespace steinshrink
