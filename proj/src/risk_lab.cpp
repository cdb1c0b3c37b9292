#include "steinshrink/risk_lab.hpp"

#include <cmath>

namespace steinshrink {

namespace {

bool singular_for(const EstimatorSpec& estimator, const Vec& x) {
  return estimator.kind == EstimatorKind::JamesStein && estimator.lambda > 0.0 && !estimator.define_zero &&
         x.squaredNorm() <= kSingularNorm2;
}

double require(const std::optional<double>& value, const char* name) {
  if (!value) throw ParameterError(std::string("bound input '") + name + "' is not set");
  return *value;
}

// sum_ij sigma_ij d_j g0_i(x) = Tr Sigma/s - 2 x' Sigma x/s^2.
double g0_contraction(const Mat& sigma, bool diagonal, const Vec& x) {
  const double s = x.squaredNorm();
  const double quad = diagonal ? sigma.diagonal().dot(x.cwiseAbs2()) : x.dot(sigma * x);
  return sigma.trace() / s - 2.0 * quad / (s * s);
}

RiskReport inverse_power(const NoiseModel& model, double power, double scale, std::size_t n, std::uint64_t seed,
                         const std::string& label) {
  const int d = model.dim();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    Vec x(d);
    model.draw(rng, x);
    const double s = x.squaredNorm();
    if (s <= kSingularNorm2) return false;
    out[0] = scale * std::pow(s, -power);
    return true;
  });
  return result.stats.report(0, seed, label);
}

}  // namespace

RiskReport mc_risk(const NoiseModel& model, const EstimatorSpec& estimator, std::size_t n, std::uint64_t seed) {
  const int d = model.dim();
  const Vec& theta = model.theta();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    Vec x(d);
    model.draw(rng, x);
    if (singular_for(estimator, x)) return false;
    out[0] = (estimator.apply(x) - theta).squaredNorm();
    return true;
  });
  return result.stats.report(0, seed, "risk:" + estimator.name());
}

RiskReport mc_excess_risk(const NoiseModel& model, const EstimatorSpec& estimator, std::size_t n,
                          std::uint64_t seed) {
  const int d = model.dim();
  const Vec& theta = model.theta();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    Vec x(d);
    model.draw(rng, x);
    if (singular_for(estimator, x)) return false;
    out[0] = (estimator.apply(x) - theta).squaredNorm() - (x - theta).squaredNorm();
    return true;
  });
  return result.stats.report(0, seed, "excess:" + estimator.name());
}

RiskReport mc_excess_risk(const NoiseModel& model, double lambda, std::size_t n, std::uint64_t seed) {
  return mc_excess_risk(model, EstimatorSpec::james_stein(lambda), n, seed);
}

RiskReport sure_bias(const NoiseModel& model, const EstimatorSpec& estimator, std::size_t n, std::uint64_t seed) {
  const int d = model.dim();
  const Vec& theta = model.theta();
  const Mat sigma = model.law().covariance();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    Vec x(d);
    model.draw(rng, x);
    if (singular_for(estimator, x)) return false;
    out[0] = sure(x, estimator, sigma) - (estimator.apply(x) - theta).squaredNorm();
    return true;
  });
  return result.stats.report(0, seed, "sure-bias:" + estimator.name());
}

RiskReport mc_e_inv2(const NoiseModel& model, std::size_t n, std::uint64_t seed) {
  return inverse_power(model, 1.0, 1.0, n, seed, "E[1/|X|^2]");
}

RiskReport mc_e_d2_inv4(const NoiseModel& model, std::size_t n, std::uint64_t seed) {
  const double d = model.dim();
  return inverse_power(model, 2.0, d * d, n, seed, "E[d^2/|X|^4]");
}

RiskReport mc_inverse_moment(const NoiseModel& model, int m, std::size_t n, std::uint64_t seed) {
  if (m < 1) throw ParameterError("inverse moment order must be >= 1");
  const double d = model.dim();
  return inverse_power(model, m, std::pow(d, m), n, seed, "E[(d/|X|^2)^" + std::to_string(m) + "]");
}

RiskReport inverse_norm6_diagnostic(const NoiseModel& model, std::size_t n, std::uint64_t seed) {
  const double d = model.dim();
  return inverse_power(model, 3.0, d * d * d, n, seed, "d^3 E[1/|X|^6]");
}

void BoundInputs::validate() const {
  auto positive = [](const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0)) throw ParameterError(std::string("bound input '") + name + "' must be positive");
  };
  positive(alpha_minus, "alpha_minus");
  positive(alpha_plus, "alpha_plus");
  positive(e_inv2, "e_inv2");
  positive(e_d2_inv4, "e_d2_inv4");
  positive(c4, "c4");
  positive(c8, "c8");
  positive(c_minus2, "c_minus2");
  positive(c_minus4, "c_minus4");
  positive(cp, "cp");
  if (alpha_minus && alpha_plus && *alpha_minus > *alpha_plus)
    throw ParameterError("alpha_minus must not exceed alpha_plus");
  if (d < 1) throw ParameterError("bound inputs need d >= 1");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
}

std::vector<std::string> BoundInputs::bound_input_labels() const {
  std::vector<std::string> labels;
  if (e_d2_inv4 && e_d2_inv4_is_bound) labels.emplace_back("e_d2_inv4:bound-input");
  return labels;
}

double bound_kernel_range(const BoundInputs& in) {
  in.validate();
  const double am = require(in.alpha_minus, "alpha_minus");
  const double ap = require(in.alpha_plus, "alpha_plus");
  const double e = require(in.e_inv2, "e_inv2");
  return in.trace_sigma - in.lambda * e * (2.0 * in.d * am - 4.0 * ap - in.lambda);
}

int improvement_dimension(double alpha_minus, double alpha_plus) {
  if (!(alpha_minus > 0.0) || alpha_plus < alpha_minus) throw ParameterError("need 0 < alpha_minus <= alpha_plus");
  return 1 + static_cast<int>(std::floor(2.0 * alpha_plus / alpha_minus));
}

double b_lambda(const BoundInputs& in) {
  in.validate();
  const double e4 = require(in.e_d2_inv4, "e_d2_inv4");
  if (!in.discrepancy) throw ParameterError("bound input 'discrepancy' is not set");
  const auto& disc = *in.discrepancy;
  return (in.lambda / in.d) * std::sqrt(e4) *
         (std::sqrt(std::max(disc.var_trace_T, 0.0)) + 2.0 * std::sqrt(std::max(disc.e_frob_T_minus_Sigma_sq, 0.0)));
}

double bound_discrepancy(const BoundInputs& in) {
  const double e = require(in.e_inv2, "e_inv2");
  return in.trace_sigma + in.lambda * e * (in.lambda - 2.0 * (in.trace_sigma - 2.0 * in.kappa)) + 2.0 * b_lambda(in);
}

double bound_zb(const BoundInputs& in, double b_star) {
  in.validate();
  const double e = require(in.e_inv2, "e_inv2");
  if (!(b_star >= 0.0)) throw ParameterError("B* must be >= 0");
  return in.trace_sigma + in.lambda * e * (in.lambda - 2.0 * (in.trace_sigma - 2.0 * in.kappa)) + 2.0 * b_star;
}

RiskReport bound_b_star(const NoiseModel& model, const ZeroBiasCoupling& coupling, double lambda, std::size_t n,
                        std::uint64_t seed) {
  if (coupling.dim() != model.dim()) throw ParameterError("coupling and model dimensions differ");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  const Vec& theta = model.theta();
  const Mat& sigma = coupling.sigma();
  const bool diagonal = coupling.diagonal();
  const VectorField g0 = g0_field();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    ZeroBiasDraw draw;
    coupling.draw(rng, draw);
    const Vec x = theta + draw.y;
    const double s = x.squaredNorm();
    if (s <= kSingularNorm2) return false;
    double at_zb = 0.0;
    if (draw.kind == ZeroBiasDraw::Kind::Common) {
      const Vec xz = theta + draw.common;
      if (xz.squaredNorm() <= kSingularNorm2) return false;
      at_zb = g0_contraction(sigma, diagonal, xz);
    } else if (draw.kind == ZeroBiasDraw::Kind::CoordinateReplace && diagonal) {
      for (const auto& [i, j] : coupling.pairs()) {
        const double zi = theta(i) + draw.replaced(i);
        const double si = s - x(i) * x(i) + zi * zi;
        if (si <= kSingularNorm2) return false;
        at_zb += sigma(i, i) * (si - 2.0 * zi * zi) / (si * si);
      }
    } else if (!zb_weighted_partials(coupling, draw, theta, g0, at_zb)) {
      return false;
    }
    out[0] = at_zb - g0_contraction(sigma, diagonal, x);
    return true;
  });
  RiskReport report = result.stats.report(0, seed, "b-star");
  report.mean = lambda * std::abs(report.mean);
  report.std_error *= lambda;
  return report;
}

double bound_b_star_closed(const BStarClosedInputs& in) {
  if (in.d < 3) throw ParameterError("closed B* bound needs d >= 3");
  if (!(in.c4 > 0.0) || !(in.c8 > 0.0) || !(in.c_minus4 > 0.0) || !(in.sigma2 > 0.0))
    throw ParameterError("closed B* bound needs positive sigma2, c4, c8, c_minus4");
  const double d = in.d;
  return in.lambda * in.cov_sum +
         (6.0 * in.lambda * std::sqrt(in.c_minus4) / (d * d)) *
             (d * (in.sigma2 * std::sqrt(in.c4) + std::sqrt(in.c8) / 3.0) +
              in.theta_norm2_sq * (in.sigma2 + in.c4));
}

double bound_b_star_mixture(const BStarClosedInputs& in) {
  if (in.d < 1 || !(in.c4 > 0.0) || !(in.c_minus2 > 0.0) || !(in.sigma2 > 0.0))
    throw ParameterError("mixture B* bound needs positive sigma2, c4, c_minus2");
  const double d = in.d;
  return (25.0 * in.c_minus2 * in.lambda / (8.0 * d * d)) *
         (d * in.c4 / 3.0 + std::pow(in.c4, 0.75) * in.theta_norm1 + 2.0 * in.sigma2 * in.theta_norm2_sq +
          d * in.sigma2 * in.sigma2);
}

double local_dependence_cov_bound(int eta, int d, double c8, double sigma2, double theta_inf) {
  if (eta < 1 || eta >= d) throw ParameterError("need 1 <= eta < d");
  if (!(c8 > 0.0) || !(sigma2 > 0.0)) throw ParameterError("need positive c8 and sigma2");
  const double s8 = std::pow(sigma2, 4);
  const double t8 = std::pow(theta_inf, 8);
  const double gap = static_cast<double>(d - eta);
  return 8.0 * eta * std::pow((c8 + s8) * (c8 + t8), 0.25) / (gap * gap);
}

InverseMomentBound inverse_moment_bound(double C, double mu, double q, int m, int d) {
  if (!(C > 0.0) || !(mu > 0.0) || !(q > 0.0) || m <= 0) throw ParameterError("need C, mu, q, m > 0");
  return {C * std::pow(2.0 / mu, m), static_cast<double>(d) >= 2.0 * m / q};
}

double jensen_lower(const Vec& theta, double trace_sigma) {
  if (!(trace_sigma > 0.0)) throw ParameterError("trace of Sigma must be positive");
  return 1.0 / (theta.squaredNorm() + trace_sigma);
}

StudentConstants student_constants(int d, double k, double lambda) {
  if (d < 6 || d % 2 != 0) throw ParameterError("Student constants need even d >= 6");
  if (!(k >= 5.0)) throw ParameterError("Student constants need k >= 5");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  const double dd = d;
  StudentConstants c;
  c.d = d;
  c.k = k;
  c.lambda = lambda;
  const double km2 = k - 2.0;
  c.e_d2_inv4_bound = dd * dd * km2 * km2 * (k + 2.0) / ((dd - 2.0) * (dd - 4.0) * k * k * k);
  const double common = 2.0 * std::pow(k, 4) / ((dd + k - 2.0) * std::pow(km2, 4) * (k - 4.0));
  c.var_trace_T = common * dd * dd * dd;
  c.e_frob_T_minus_Sigma_sq = common * dd * dd;
  c.kernel_excess_bound =
      24.0 * lambda *
      std::sqrt(2.0 * dd * dd * (k + 2.0) / ((dd - 2.0) * (dd - 4.0) * (dd + k - 2.0) * k * (k - 4.0)));
  c.kernel_excess_from_constants = 2.0 * (lambda / dd) * std::sqrt(c.e_d2_inv4_bound) *
                                   (std::sqrt(c.var_trace_T) + 2.0 * std::sqrt(c.e_frob_T_minus_Sigma_sq));
  c.zero_bias_excess_bound = 16.0 * lambda * (dd + k - 2.0) / ((dd - 2.0) * k);
  return c;
}

double pinsker_limit(double sigma2, double c2) {
  if (!(sigma2 >= 0.0) || !(c2 >= 0.0)) throw ParameterError("pinsker limit needs sigma2, c2 >= 0");
  if (sigma2 + c2 == 0.0) return 0.0;
  if (std::isinf(c2)) return sigma2;
  return sigma2 * c2 / (sigma2 + c2);
}

double adaptivity_bound_kernel(double theta_norm2, double sigma2, int d, double b_lambda_value) {
  if (d < 3 || !(sigma2 > 0.0)) throw ParameterError("adaptivity bound needs d >= 3 and sigma2 > 0");
  const double s = sigma2 / d;
  const double dm2 = d - 2.0;
  return d * s - dm2 * dm2 * s * s / (theta_norm2 + d * s) + 2.0 * b_lambda_value;
}

double adaptivity_bound_zero_bias(const Vec& theta, double sigma2, int d, double L) {
  if (d < 3 || !(sigma2 > 0.0)) throw ParameterError("adaptivity bound needs d >= 3 and sigma2 > 0");
  const double t2 = theta.squaredNorm();
  if (!(t2 > 0.0)) throw ParameterError("adaptivity bound needs theta != 0");
  const double dd = d;
  const double lambda = (dd - 2.0) * sigma2 / dd;
  return sigma2 * t2 / (sigma2 + t2) * (1.0 + 4.0 * sigma2 / (dd * t2)) +
         L * lambda * (1.0 / dd + theta.lpNorm<1>() / (dd * dd) + t2 / (dd * dd * dd));
}

SphereComparison sphere_comparison(int d, double sigma2, double c_low, double c_high, std::optional<double> lambda) {
  if (d < 3 || !(sigma2 > 0.0)) throw ParameterError("sphere comparison needs d >= 3 and sigma2 > 0");
  if (!(c_low > 1.0) || c_high < c_low) throw ParameterError("sphere comparison needs 1 < c <= C");
  const double dd = d;
  SphereComparison out;
  out.lambda = lambda.value_or(sigma2 * (dd - 2.0));
  if (!(out.lambda >= 0.0) || out.lambda > 2.0 * sigma2 * (dd - 2.0))
    throw ParameterError("sphere comparison needs lambda in [0, 2 sigma^2 (d-2)]");
  // ||X||^2 <= (sqrt C + 1)^2 sigma^2 d on the support.
  const double upper_norm2 = std::pow(std::sqrt(c_high) + 1.0, 2) * sigma2 * dd;
  out.gain_term = out.lambda * (out.lambda - 2.0 * sigma2 * (dd - 2.0)) / upper_norm2;
  // 2 lambda sigma^2 (d-2) * alpha sigma / sqrt(d), alpha = 2 / ((sqrt c - 1)^3 sigma^3 d^{3/2}).
  out.two_b_star_closed = 4.0 * out.lambda * (dd - 2.0) / (std::pow(std::sqrt(c_low) - 1.0, 3) * dd * dd);
  out.improves = out.gain_term + out.two_b_star_closed < 0.0;
  return out;
}

double sphere_crossing_dimension(double c_low, double c_high) {
  if (!(c_low > 1.0) || c_high < c_low) throw ParameterError("need 1 < c <= C");
  return 4.0 * std::pow(std::sqrt(c_high) + 1.0, 2) / std::pow(std::sqrt(c_low) - 1.0, 3);
}

}  // namespace steinshrink
