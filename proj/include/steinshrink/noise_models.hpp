#pragma once

#include "steinshrink/core.hpp"
#include "steinshrink/random.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace steinshrink {

// ---------------------------------------------------------------------------
// One-dimensional laws used coordinatewise by ProductIID.
// ---------------------------------------------------------------------------

enum class Law1DKind { Gaussian, Laplace, Uniform, SmoothedRademacher };

/// Symmetric, mean-zero univariate law parameterized by its variance.
///
/// The smoothed Rademacher law is a*R + tau*Z with R = +-1, Z standard normal
/// and tau = smoothing * sqrt(variance); it keeps a density while staying
/// close to the two-point law.
class Law1D {
 public:
  static Law1D gaussian(double variance);
  static Law1D laplace(double variance);
  static Law1D uniform(double variance);
  static Law1D smoothed_rademacher(double variance, double smoothing = 0.1);

  Law1DKind kind() const { return kind_; }
  double variance() const { return variance_; }
  double smoothing() const { return smoothing_; }
  std::string name() const;

  /// Same kind, variance multiplied by c2.
  Law1D scaled(double c2) const;

  double sample(Rng& rng) const;
  double density(double y) const;
  double log_density(double y) const;

  /// Univariate Stein kernel (1/p(y)) * int_y^inf u p(u) du.
  double stein_kernel(double y) const;
  /// Same quantity computed by adaptive quadrature of the density; an
  /// independent route used to validate the closed forms.
  double stein_kernel_quadrature(double y) const;

  /// Zero-bias density p*(y) = sigma^{-2} int_y^inf u p(u) du.
  double zero_bias_density(double y) const;
  /// Exact draw from the zero-bias law.
  double sample_zero_bias(Rng& rng) const;

  /// Central moment E[Y^r] for even r (odd r return 0).
  double moment(int r) const;

  /// |Y| <= bound almost surely, when the support is bounded.
  std::optional<double> support_bound() const;
  /// Interval outside which the density is negligible (used for tabulation).
  double effective_half_width() const;

  /// Parameters derived from the variance.
  double laplace_scale() const;      // b
  double uniform_half_width() const; // a
  double rademacher_atom() const;    // a of a*R + tau*Z
  double rademacher_tau() const;     // tau

 private:
  Law1D(Law1DKind kind, double variance, double smoothing);
  double tail_first_moment(double y) const;  // int_y^inf u p(u) du

  Law1DKind kind_;
  double variance_;
  double smoothing_;
};

// ---------------------------------------------------------------------------
// Elliptical density generators.
// ---------------------------------------------------------------------------

enum class GeneratorKind { Gaussian, Student, PowerTail };

/// Density generator phi with p(x) proportional to phi(x' Ups^{-1} x / 2).
///   Gaussian:  phi(t) = exp(-t)
///   Student:   phi(t) = (1 + 2t/k)^{-(k+d)/2}
///   PowerTail: phi(t) = (1 + t)^{-a}, requires a > d/2 + 1 for a covariance
struct Generator {
  GeneratorKind kind = GeneratorKind::Gaussian;
  double param = 0.0;  // k for Student, a for PowerTail
  int dim = 1;

  static Generator gaussian(int d) { return {GeneratorKind::Gaussian, 0.0, d}; }
  static Generator student(double k, int d) { return {GeneratorKind::Student, k, d}; }
  static Generator power_tail(double a, int d) { return {GeneratorKind::PowerTail, a, d}; }

  double phi(double t) const;
  double log_phi(double t) const;
  /// Closed form of int_t^inf phi(u) du.
  double tail_integral(double t) const;
  /// E[r^{2m}] for r^2 = x' Ups^{-1} x.
  double radial_moment(int m) const;
  /// Cov = covariance_factor() * Ups.
  double covariance_factor() const { return radial_moment(1) / dim; }
  /// Draw r^2 = x' Ups^{-1} x.
  double sample_radius2(Rng& rng) const;
  /// log of the normalizing constant kappa; closed form for Gaussian and
  /// Student, radial quadrature otherwise.
  double log_normalizer() const;
  /// Radial-quadrature normalizer, available for every generator.
  double log_normalizer_quadrature() const;
  std::string name() const;
};

// ---------------------------------------------------------------------------
// Centered laws Y (mean zero). A NoiseModel is theta + Y.
// ---------------------------------------------------------------------------

class CenteredLaw;
using LawPtr = std::shared_ptr<const CenteredLaw>;

namespace family {
struct GaussianIso {
  double sigma2;
};
/// Y = sqrt(dispersion / gamma) * N with gamma ~ Gamma(k/2, k/2);
/// Cov(Y) = dispersion * k/(k-2) * Id.
struct StudentT {
  double k;
  double dispersion = 1.0;
};
/// Y = sigma * sqrt(d) * U with U uniform on S^{d-1}; Cov(Y) = sigma^2 Id.
struct SphereUniform {
  double sigma;
};
/// Uniform on the ball of radius sigma*sqrt(d); Cov = sigma^2 d/(d+2) Id.
struct BallUniform {
  double sigma;
};
struct ProductIID {
  std::vector<Law1D> coords;
};
struct EllipticalScaled {
  Generator generator;
  Mat dispersion;
  Mat chol;  // lower Cholesky factor of dispersion
};
struct Mixture {
  std::vector<LawPtr> components;
  std::vector<double> weights;
};
/// Y = sqrt(1-eps) * Y0 + sqrt(eps) * Y1, Y0 ~ N(0, sigma2 Id).
struct CorruptedAdditive {
  double eps;
  double sigma2;
  LawPtr outlier;
};
/// Y = Y0 ~ N(0, sigma2 Id) with probability 1-eps, Y1 otherwise.
struct CorruptedMixing {
  double eps;
  double sigma2;
  LawPtr outlier;
};
/// Y = A U with U from `base` (A is d x m).
struct LinearTransform {
  Mat A;
  LawPtr base;
};
/// Y = sum_j scale_j * Y_j for independent Y_j.
struct IndependentSum {
  std::vector<LawPtr> parts;
  std::vector<double> scales;
};
/// Uniform on a finite set of points.
struct FinitePoints {
  std::vector<Vec> points;
};
}  // namespace family

using Family = std::variant<family::GaussianIso, family::StudentT, family::SphereUniform,
                            family::BallUniform, family::ProductIID, family::EllipticalScaled,
                            family::Mixture, family::CorruptedAdditive, family::CorruptedMixing,
                            family::LinearTransform, family::IndependentSum, family::FinitePoints>;

struct MomentSummary {
  Vec mean;
  Mat cov;
  double trace_cov = 0.0;
  double kappa = 0.0;  // largest eigenvalue of cov
  std::optional<double> c4;  // sup_i E (X_i - theta_i)^4
  std::optional<double> c8;  // sup_i E (X_i - theta_i)^8
};

class CenteredLaw {
 public:
  CenteredLaw(int dim, Family family);

  int dim() const { return dim_; }
  const Family& family() const { return family_; }
  std::string name() const;

  void sample(Rng& rng, std::span<double> out) const;
  Vec sample(Rng& rng) const;

  Mat covariance() const;
  /// E[Y_i^r]; throws UnavailableError when the moment is infinite or unknown.
  double coordinate_moment(int i, int r) const;
  /// log density at y, or nullopt for laws without a Lebesgue density.
  std::optional<double> log_density(const Vec& y) const;

  bool is_gaussian() const;
  /// E[Y_i | Y_j, j != i] = 0 for every i (declared per family).
  bool conditional_mean_zero() const;
  /// Has a density bounded in a neighborhood of the origin.
  bool density_bounded_near_origin() const;
  /// |Y_i| <= bound almost surely.
  std::optional<double> coordinate_bound(int i) const;

 private:
  int dim_;
  Family family_;
  Mat cov_;
};

// Law factories. All validate parameters and throw ParameterError.
LawPtr gaussian_iso(int d, double sigma2);
LawPtr student_t(int d, double k, double dispersion = 1.0);
LawPtr sphere_uniform(int d, double sigma);
LawPtr ball_uniform(int d, double sigma);
LawPtr product_iid(int d, const Law1D& law);
LawPtr product(std::vector<Law1D> coords);
LawPtr elliptical(const Generator& generator, const Mat& dispersion);
LawPtr mixture(std::vector<LawPtr> components, std::vector<double> weights);
LawPtr corrupted_additive(double eps, double sigma2, LawPtr outlier);
LawPtr corrupted_mixing(double eps, double sigma2, LawPtr outlier);
LawPtr linear_transform(const Mat& A, LawPtr base);
LawPtr independent_sum(std::vector<LawPtr> parts, std::vector<double> scales);
LawPtr finite_points(std::vector<Vec> points);
/// c * Y, keeping the family when it is closed under scaling.
LawPtr scaled(const LawPtr& law, double c);

/// Observation law X = theta + Y.
class NoiseModel {
 public:
  /// With `pinsker` set, Y is rescaled by 1/sqrt(d) so the coordinate
  /// variance becomes sigma^2/d.
  NoiseModel(LawPtr law, Vec theta, bool pinsker = false);

  int dim() const { return law_->dim(); }
  const CenteredLaw& law() const { return *law_; }
  const LawPtr& law_ptr() const { return law_; }
  const Vec& theta() const { return theta_; }
  bool pinsker() const { return pinsker_; }
  std::string name() const { return law_->name(); }

  /// Draw X into `out`.
  void draw(Rng& rng, Vec& out) const;

 private:
  LawPtr law_;
  Vec theta_;
  bool pinsker_;
};

/// n i.i.d. draws of X, one per column; draw j uses seed derive_seed(seed, j).
Mat sample(const NoiseModel& model, std::size_t n, std::uint64_t seed);

/// Mean, covariance and coordinate moment caps. c4/c8 are left empty when
/// `with_high_moments` is false; when requested but unavailable an
/// UnavailableError is thrown.
MomentSummary moments(const NoiseModel& model, bool with_high_moments = false);

/// Natural log of the density of X at x; nullopt when X has no density.
std::optional<double> log_density(const NoiseModel& model, const Vec& x);

enum class ValidityNeed { Kernel, ZeroBias };

struct ValidityReport {
  bool ok = true;
  std::vector<std::string> reasons;
  std::vector<std::string> warnings;
};

/// Sufficient conditions for g0(x) = x/||x||^2 to be admissible in the Stein
/// kernel identity (need=Kernel) or in the zero-bias identity (need=ZeroBias).
ValidityReport validity_check(const NoiseModel& model, ValidityNeed need);

/// |y_i| p(y) <= g_i(y_i) for integrable g_i, decided per family (false when
/// the law has no density or the property is not established).
bool coordinate_domination(const CenteredLaw& law);

/// theta from "zero", "scaled:c" (theta_i = c/sqrt(d), so ||theta|| = c),
/// "spikes:m:h" (first m coordinates equal to h, the rest 0), or the path of a
/// text file with one decimal per line.
Vec parse_theta(const std::string& spec, int d);

}  // namespace steinshrink
