#include "steinshrink/noise_models.hpp"

#include "steinshrink/quadrature.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace steinshrink {

using detail::double_factorial_odd;
using detail::overloaded;

namespace {

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double std_normal_upper(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// E[U_1^r] for U uniform on S^{d-1}, r even.
double sphere_coordinate_moment(int d, int r) {
  if (r % 2 != 0) return 0.0;
  double value = double_factorial_odd(r - 1);
  for (int j = 0; j < r / 2; ++j) value /= (d + 2.0 * j);
  return value;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ParameterError(message);
}

}  // namespace

// ---------------------------------------------------------------------------
// Law1D
// ---------------------------------------------------------------------------

Law1D::Law1D(Law1DKind kind, double variance, double smoothing)
    : kind_(kind), variance_(variance), smoothing_(smoothing) {
  require(std::isfinite(variance) && variance > 0.0, "1-D law variance must be positive and finite");
  require(smoothing > 0.0 && smoothing < 1.0, "smoothing fraction must lie in (0, 1)");
}

Law1D Law1D::gaussian(double variance) { return {Law1DKind::Gaussian, variance, 0.1}; }
Law1D Law1D::laplace(double variance) { return {Law1DKind::Laplace, variance, 0.1}; }
Law1D Law1D::uniform(double variance) { return {Law1DKind::Uniform, variance, 0.1}; }
Law1D Law1D::smoothed_rademacher(double variance, double smoothing) {
  return {Law1DKind::SmoothedRademacher, variance, smoothing};
}

Law1D Law1D::scaled(double c2) const { return {kind_, variance_ * c2, smoothing_}; }

std::string Law1D::name() const {
  switch (kind_) {
    case Law1DKind::Gaussian: return "gaussian";
    case Law1DKind::Laplace: return "laplace";
    case Law1DKind::Uniform: return "uniform";
    case Law1DKind::SmoothedRademacher: return "rademacher";
  }
  return "unknown";
}

double Law1D::laplace_scale() const { return std::sqrt(variance_ / 2.0); }
double Law1D::uniform_half_width() const { return std::sqrt(3.0 * variance_); }
double Law1D::rademacher_tau() const { return smoothing_ * std::sqrt(variance_); }
double Law1D::rademacher_atom() const {
  const double tau = rademacher_tau();
  return std::sqrt(variance_ - tau * tau);
}

double Law1D::sample(Rng& rng) const {
  switch (kind_) {
    case Law1DKind::Gaussian: return std::sqrt(variance_) * rng.normal();
    case Law1DKind::Laplace: return rng.rademacher() * rng.exponential(1.0 / laplace_scale());
    case Law1DKind::Uniform: return uniform_half_width() * (2.0 * rng.uniform() - 1.0);
    case Law1DKind::SmoothedRademacher:
      return rademacher_atom() * rng.rademacher() + rademacher_tau() * rng.normal();
  }
  return 0.0;
}

double Law1D::density(double y) const {
  switch (kind_) {
    case Law1DKind::Gaussian: {
      const double s = std::sqrt(variance_);
      return std_normal_pdf(y / s) / s;
    }
    case Law1DKind::Laplace: {
      const double b = laplace_scale();
      return std::exp(-std::abs(y) / b) / (2.0 * b);
    }
    case Law1DKind::Uniform: {
      const double a = uniform_half_width();
      return std::abs(y) <= a ? 0.5 / a : 0.0;
    }
    case Law1DKind::SmoothedRademacher: {
      const double a = rademacher_atom();
      const double tau = rademacher_tau();
      return 0.5 * (std_normal_pdf((y - a) / tau) + std_normal_pdf((y + a) / tau)) / tau;
    }
  }
  return 0.0;
}

double Law1D::log_density(double y) const {
  switch (kind_) {
    case Law1DKind::Gaussian:
      return -0.5 * std::log(2.0 * std::numbers::pi * variance_) - 0.5 * y * y / variance_;
    case Law1DKind::Laplace: {
      const double b = laplace_scale();
      return -std::abs(y) / b - std::log(2.0 * b);
    }
    case Law1DKind::Uniform: {
      const double a = uniform_half_width();
      return std::abs(y) <= a ? -std::log(2.0 * a) : -std::numeric_limits<double>::infinity();
    }
    case Law1DKind::SmoothedRademacher: {
      const double a = rademacher_atom();
      const double tau = rademacher_tau();
      const double u = std::abs(y);
      // log of 0.5*(phi((u-a)/tau) + phi((u+a)/tau))/tau, factoring the larger term.
      const double z1 = (u - a) / tau;
      const double z2 = (u + a) / tau;
      return -0.5 * z1 * z1 + std::log1p(std::exp(-0.5 * (z2 * z2 - z1 * z1))) -
             0.5 * std::log(2.0 * std::numbers::pi) - std::log(2.0 * tau);
    }
  }
  return 0.0;
}

double Law1D::tail_first_moment(double y) const {
  // The integrand u p(u) is odd, so the tail integral is even in y.
  const double u = std::abs(y);
  switch (kind_) {
    case Law1DKind::Gaussian: return variance_ * density(u);
    case Law1DKind::Laplace: {
      const double b = laplace_scale();
      return 0.5 * std::exp(-u / b) * (u + b);
    }
    case Law1DKind::Uniform: {
      const double a = uniform_half_width();
      return u <= a ? (a * a - u * u) / (4.0 * a) : 0.0;
    }
    case Law1DKind::SmoothedRademacher: {
      const double a = rademacher_atom();
      const double tau = rademacher_tau();
      const double z1 = (u - a) / tau;
      const double z2 = (u + a) / tau;
      return 0.5 * (a * std_normal_upper(z1) + tau * std_normal_pdf(z1)) +
             0.5 * (-a * std_normal_upper(z2) + tau * std_normal_pdf(z2));
    }
  }
  return 0.0;
}

double Law1D::stein_kernel(double y) const {
  switch (kind_) {
    case Law1DKind::Gaussian: return variance_;
    case Law1DKind::Laplace: {
      const double b = laplace_scale();
      return b * (std::abs(y) + b);
    }
    case Law1DKind::Uniform: {
      const double a = uniform_half_width();
      if (std::abs(y) > a) throw UnavailableError("Stein kernel evaluated outside the support");
      return 0.5 * (a * a - y * y);
    }
    case Law1DKind::SmoothedRademacher: {
      const double p = density(y);
      if (!(p > 0.0)) throw UnavailableError("Stein kernel evaluated where the density vanishes");
      return tail_first_moment(y) / p;
    }
  }
  return 0.0;
}

double Law1D::stein_kernel_quadrature(double y) const {
  const double p = density(y);
  if (!(p > 0.0)) throw UnavailableError("Stein kernel evaluated where the density vanishes");
  const double u = std::abs(y);
  const auto bound = support_bound();
  const double upper = bound ? *bound : std::numeric_limits<double>::infinity();
  const double tail = quad::integrate([this](double t) { return t * density(t); }, u, upper);
  return tail / p;
}

double Law1D::zero_bias_density(double y) const { return tail_first_moment(y) / variance_; }

double Law1D::sample_zero_bias(Rng& rng) const {
  switch (kind_) {
    case Law1DKind::Gaussian: return std::sqrt(variance_) * rng.normal();
    case Law1DKind::Laplace: {
      // |Y*|/b is an equal mixture of Exp(1) and Gamma(2, 1).
      const double shape = rng.uniform() < 0.5 ? 1.0 : 2.0;
      return rng.rademacher() * laplace_scale() * rng.gamma(shape, 1.0);
    }
    case Law1DKind::Uniform: {
      // Y* = V * Ysq with V ~ U[0,1] and Ysq the square-biased law.
      const double square_biased = uniform_half_width() * std::cbrt(rng.uniform());
      return rng.rademacher() * rng.uniform() * square_biased;
    }
    case Law1DKind::SmoothedRademacher: {
      // Zero bias of a sum: replace the summand picked with probability
      // proportional to its variance.
      const double a = rademacher_atom();
      const double tau = rademacher_tau();
      const double atom = rng.uniform() < a * a / variance_ ? a * (2.0 * rng.uniform() - 1.0)
                                                           : a * rng.rademacher();
      return atom + tau * rng.normal();
    }
  }
  return 0.0;
}

double Law1D::moment(int r) const {
  if (r < 0) throw ParameterError("moment order must be nonnegative");
  if (r % 2 != 0) return 0.0;
  const int m = r / 2;
  switch (kind_) {
    case Law1DKind::Gaussian: return double_factorial_odd(r - 1) * std::pow(variance_, m);
    case Law1DKind::Laplace: return std::tgamma(r + 1.0) * std::pow(laplace_scale(), r);
    case Law1DKind::Uniform: return std::pow(uniform_half_width(), r) / (r + 1.0);
    case Law1DKind::SmoothedRademacher: {
      const double a = rademacher_atom();
      const double tau = rademacher_tau();
      double total = 0.0;
      for (int j = 0; j <= r; j += 2) {
        const double binom = std::tgamma(r + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(r - j + 1.0));
        total += binom * std::pow(a, r - j) * std::pow(tau, j) * double_factorial_odd(j - 1);
      }
      return total;
    }
  }
  return 0.0;
}

std::optional<double> Law1D::support_bound() const {
  if (kind_ == Law1DKind::Uniform) return uniform_half_width();
  return std::nullopt;
}

double Law1D::effective_half_width() const {
  switch (kind_) {
    case Law1DKind::Gaussian: return 12.0 * std::sqrt(variance_);
    case Law1DKind::Laplace: return 50.0 * laplace_scale();
    case Law1DKind::Uniform: return uniform_half_width();
    case Law1DKind::SmoothedRademacher: return rademacher_atom() + 12.0 * rademacher_tau();
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

double Generator::log_phi(double t) const {
  switch (kind) {
    case GeneratorKind::Gaussian: return -t;
    case GeneratorKind::Student: return -0.5 * (param + dim) * std::log1p(2.0 * t / param);
    case GeneratorKind::PowerTail: return -param * std::log1p(t);
  }
  return 0.0;
}

double Generator::phi(double t) const { return std::exp(log_phi(t)); }

double Generator::tail_integral(double t) const {
  switch (kind) {
    case GeneratorKind::Gaussian: return std::exp(-t);
    case GeneratorKind::Student: {
      const double e = 0.5 * (param + dim);
      return 0.5 * param * std::pow(1.0 + 2.0 * t / param, 1.0 - e) / (e - 1.0);
    }
    case GeneratorKind::PowerTail: return std::pow(1.0 + t, 1.0 - param) / (param - 1.0);
  }
  return 0.0;
}

double Generator::radial_moment(int m) const {
  const double half_d = 0.5 * dim;
  const double chi_d = std::exp(m * std::log(2.0) + std::lgamma(half_d + m) - std::lgamma(half_d));
  switch (kind) {
    case GeneratorKind::Gaussian: return chi_d;
    case GeneratorKind::Student: {
      const double half_k = 0.5 * param;
      if (half_k <= m) throw UnavailableError("Student radial moment of order " + std::to_string(m) + " is infinite");
      // q = k * chi2_d / chi2_k
      const double inv_chi_k = std::exp(-m * std::log(2.0) + std::lgamma(half_k - m) - std::lgamma(half_k));
      return std::pow(param, m) * chi_d * inv_chi_k;
    }
    case GeneratorKind::PowerTail: {
      const double b = param - half_d;
      if (b <= m) throw UnavailableError("power-tail radial moment of order " + std::to_string(m) + " is infinite");
      // q/2 is beta-prime(d/2, a - d/2)
      return std::exp(m * std::log(2.0) + std::lgamma(half_d + m) + std::lgamma(b - m) -
                      std::lgamma(half_d) - std::lgamma(b));
    }
  }
  return 0.0;
}

double Generator::sample_radius2(Rng& rng) const {
  const double half_d = 0.5 * dim;
  switch (kind) {
    case GeneratorKind::Gaussian: return rng.gamma(half_d, 0.5);
    case GeneratorKind::Student: return param * rng.gamma(half_d, 0.5) / rng.gamma(0.5 * param, 0.5);
    case GeneratorKind::PowerTail: return 2.0 * rng.gamma(half_d, 1.0) / rng.gamma(param - half_d, 1.0);
  }
  return 0.0;
}

double Generator::log_normalizer_quadrature() const {
  // int phi(|x|^2/2) dx = |S^{d-1}| 2^{d/2-1} int_0^inf t^{d/2-1} phi(t) dt.
  // Substituting t = e^s gives an integrand exp(h(s)) with h concave-ish;
  // center it at its maximum so the quadrature sees values of order one.
  const double half_d = 0.5 * dim;
  auto h = [&](double s) { return half_d * s + log_phi(std::exp(s)); };
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (h(m1) < h(m2)) lo = m1; else hi = m2;
  }
  const double s_star = 0.5 * (lo + hi);
  const double h_star = h(s_star);
  auto f = [&](double s) { return std::exp(h(s) - h_star); };
  const double inf = std::numeric_limits<double>::infinity();
  const double integral = quad::integrate(f, -inf, s_star) + quad::integrate(f, s_star, inf);
  const double log_sphere = std::log(2.0) + half_d * std::log(std::numbers::pi) - std::lgamma(half_d);
  const double log_total = log_sphere + (half_d - 1.0) * std::log(2.0) + h_star + std::log(integral);
  return -log_total;
}

double Generator::log_normalizer() const {
  const double half_d = 0.5 * dim;
  switch (kind) {
    case GeneratorKind::Gaussian: return -half_d * std::log(2.0 * std::numbers::pi);
    case GeneratorKind::Student:
      return std::lgamma(0.5 * (param + dim)) - std::lgamma(0.5 * param) -
             half_d * std::log(param * std::numbers::pi);
    case GeneratorKind::PowerTail: return log_normalizer_quadrature();
  }
  return 0.0;
}

std::string Generator::name() const {
  std::ostringstream os;
  switch (kind) {
    case GeneratorKind::Gaussian: os << "gaussian"; break;
    case GeneratorKind::Student: os << "student(k=" << param << ")"; break;
    case GeneratorKind::PowerTail: os << "powertail(a=" << param << ")"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// CenteredLaw
// ---------------------------------------------------------------------------

namespace {

Mat compute_covariance(int d, const Family& fam) {
  return std::visit(
      overloaded{
          [&](const family::GaussianIso& f) -> Mat { return f.sigma2 * Mat::Identity(d, d); },
          [&](const family::StudentT& f) -> Mat {
            return f.dispersion * f.k / (f.k - 2.0) * Mat::Identity(d, d);
          },
          [&](const family::SphereUniform& f) -> Mat { return f.sigma * f.sigma * Mat::Identity(d, d); },
          [&](const family::BallUniform& f) -> Mat {
            return f.sigma * f.sigma * d / (d + 2.0) * Mat::Identity(d, d);
          },
          [&](const family::ProductIID& f) -> Mat {
            Vec v(d);
            for (int i = 0; i < d; ++i) v(i) = f.coords[i].variance();
            return v.asDiagonal();
          },
          [&](const family::EllipticalScaled& f) -> Mat {
            return f.generator.covariance_factor() * f.dispersion;
          },
          [&](const family::Mixture& f) -> Mat {
            Mat c = Mat::Zero(d, d);
            for (std::size_t s = 0; s < f.components.size(); ++s)
              c += f.weights[s] * f.components[s]->covariance();
            return c;
          },
          [&](const family::CorruptedAdditive& f) -> Mat {
            return (1.0 - f.eps) * f.sigma2 * Mat::Identity(d, d) + f.eps * f.outlier->covariance();
          },
          [&](const family::CorruptedMixing& f) -> Mat {
            return (1.0 - f.eps) * f.sigma2 * Mat::Identity(d, d) + f.eps * f.outlier->covariance();
          },
          [&](const family::LinearTransform& f) -> Mat {
            return f.A * f.base->covariance() * f.A.transpose();
          },
          [&](const family::IndependentSum& f) -> Mat {
            Mat c = Mat::Zero(d, d);
            for (std::size_t j = 0; j < f.parts.size(); ++j)
              c += f.scales[j] * f.scales[j] * f.parts[j]->covariance();
            return c;
          },
          [&](const family::FinitePoints& f) -> Mat {
            Mat c = Mat::Zero(d, d);
            for (const auto& p : f.points) c += p * p.transpose();
            return c / static_cast<double>(f.points.size());
          },
      },
      fam);
}

}  // namespace

CenteredLaw::CenteredLaw(int dim, Family fam) : dim_(dim), family_(std::move(fam)) {
  require(dim >= 1, "dimension must be at least 1");
  cov_ = compute_covariance(dim_, family_);
}

std::string CenteredLaw::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const family::GaussianIso&) { os << "gaussian"; },
                 [&](const family::StudentT& f) { os << "student(k=" << f.k << ")"; },
                 [&](const family::SphereUniform&) { os << "sphere"; },
                 [&](const family::BallUniform&) { os << "ball"; },
                 [&](const family::ProductIID& f) { os << "product-" << f.coords.front().name(); },
                 [&](const family::EllipticalScaled& f) { os << "elliptical-" << f.generator.name(); },
                 [&](const family::Mixture& f) { os << "mixture(" << f.components.size() << ")"; },
                 [&](const family::CorruptedAdditive& f) {
                   os << "corrupted-additive(eps=" << f.eps << "," << f.outlier->name() << ")";
                 },
                 [&](const family::CorruptedMixing& f) {
                   os << "corrupted-mixing(eps=" << f.eps << "," << f.outlier->name() << ")";
                 },
                 [&](const family::LinearTransform& f) { os << "linear(" << f.base->name() << ")"; },
                 [&](const family::IndependentSum& f) {
                   os << "sum(";
                   for (std::size_t j = 0; j < f.parts.size(); ++j) os << (j ? "," : "") << f.parts[j]->name();
                   os << ")";
                 },
                 [&](const family::FinitePoints& f) { os << "points(" << f.points.size() << ")"; },
             },
             family_);
  return os.str();
}

void CenteredLaw::sample(Rng& rng, std::span<double> out) const {
  const int d = dim_;
  std::visit(
      overloaded{
          [&](const family::GaussianIso& f) {
            const double s = std::sqrt(f.sigma2);
            for (auto& v : out) v = s * rng.normal();
          },
          [&](const family::StudentT& f) {
            const double gamma = rng.gamma(0.5 * f.k, 0.5 * f.k);
            const double s = std::sqrt(f.dispersion / gamma);
            for (auto& v : out) v = s * rng.normal();
          },
          [&](const family::SphereUniform& f) {
            rng.unit_sphere(out);
            const double r = f.sigma * std::sqrt(static_cast<double>(d));
            for (auto& v : out) v *= r;
          },
          [&](const family::BallUniform& f) {
            rng.unit_ball(out);
            const double r = f.sigma * std::sqrt(static_cast<double>(d));
            for (auto& v : out) v *= r;
          },
          [&](const family::ProductIID& f) {
            for (int i = 0; i < d; ++i) out[i] = f.coords[i].sample(rng);
          },
          [&](const family::EllipticalScaled& f) {
            Vec u(d);
            rng.unit_sphere({u.data(), static_cast<std::size_t>(d)});
            const double r = std::sqrt(f.generator.sample_radius2(rng));
            const Vec v = f.chol.triangularView<Eigen::Lower>() * u;
            Eigen::Map<Vec>(out.data(), d) = r * v;
          },
          [&](const family::Mixture& f) {
            double u = rng.uniform();
            std::size_t s = 0;
            while (s + 1 < f.weights.size() && u >= f.weights[s]) u -= f.weights[s++];
            f.components[s]->sample(rng, out);
          },
          [&](const family::CorruptedAdditive& f) {
            Vec z(d);
            f.outlier->sample(rng, {z.data(), static_cast<std::size_t>(d)});
            const double a = std::sqrt((1.0 - f.eps) * f.sigma2);
            const double b = std::sqrt(f.eps);
            for (int i = 0; i < d; ++i) out[i] = a * rng.normal() + b * z(i);
          },
          [&](const family::CorruptedMixing& f) {
            if (rng.uniform() < f.eps) {
              f.outlier->sample(rng, out);
            } else {
              const double s = std::sqrt(f.sigma2);
              for (auto& v : out) v = s * rng.normal();
            }
          },
          [&](const family::LinearTransform& f) {
            Vec u(f.base->dim());
            f.base->sample(rng, {u.data(), static_cast<std::size_t>(u.size())});
            Eigen::Map<Vec>(out.data(), d) = f.A * u;
          },
          [&](const family::IndependentSum& f) {
            Eigen::Map<Vec> y(out.data(), d);
            y.setZero();
            Vec part(d);
            for (std::size_t j = 0; j < f.parts.size(); ++j) {
              f.parts[j]->sample(rng, {part.data(), static_cast<std::size_t>(d)});
              y += f.scales[j] * part;
            }
          },
          [&](const family::FinitePoints& f) {
            const auto& p = f.points[rng.index(f.points.size())];
            for (int i = 0; i < d; ++i) out[i] = p(i);
          },
      },
      family_);
}

Vec CenteredLaw::sample(Rng& rng) const {
  Vec y(dim_);
  sample(rng, {y.data(), static_cast<std::size_t>(dim_)});
  return y;
}

Mat CenteredLaw::covariance() const { return cov_; }

double CenteredLaw::coordinate_moment(int i, int r) const {
  if (i < 0 || i >= dim_) throw ParameterError("coordinate index out of range");
  if (r == 2) return cov_(i, i);
  const int d = dim_;
  return std::visit(
      overloaded{
          [&](const family::GaussianIso& f) {
            return r % 2 ? 0.0 : double_factorial_odd(r - 1) * std::pow(f.sigma2, r / 2);
          },
          [&](const family::StudentT& f) {
            if (r % 2) return 0.0;
            if (r >= f.k)
              throw UnavailableError("moment unavailable: Student-t with k=" + std::to_string(f.k) +
                                     " has no moment of order " + std::to_string(r));
            const double p = 0.5 * r;
            const double inv_gamma = std::exp(p * std::log(0.5 * f.k) + std::lgamma(0.5 * f.k - p) -
                                              std::lgamma(0.5 * f.k));
            return std::pow(f.dispersion, p) * double_factorial_odd(r - 1) * inv_gamma;
          },
          [&](const family::SphereUniform& f) {
            return std::pow(f.sigma * f.sigma * d, 0.5 * r) * sphere_coordinate_moment(d, r);
          },
          [&](const family::BallUniform& f) {
            return std::pow(f.sigma * f.sigma * d, 0.5 * r) * sphere_coordinate_moment(d, r) * d /
                   (d + static_cast<double>(r));
          },
          [&](const family::ProductIID& f) { return f.coords[i].moment(r); },
          [&](const family::EllipticalScaled& f) {
            if (r % 2) return 0.0;
            return f.generator.radial_moment(r / 2) * std::pow(f.dispersion(i, i), 0.5 * r) *
                   sphere_coordinate_moment(d, r);
          },
          [&](const family::Mixture& f) {
            double total = 0.0;
            for (std::size_t s = 0; s < f.components.size(); ++s)
              total += f.weights[s] * f.components[s]->coordinate_moment(i, r);
            return total;
          },
          [&](const family::CorruptedAdditive& f) {
            // Binomial expansion; the outlier families are symmetric, so only
            // even powers of each summand contribute.
            if (r % 2) return 0.0;
            double total = 0.0;
            for (int j = 0; j <= r; j += 2) {
              const double binom = std::tgamma(r + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(r - j + 1.0));
              total += binom * double_factorial_odd(j - 1) * std::pow((1.0 - f.eps) * f.sigma2, 0.5 * j) *
                       std::pow(f.eps, 0.5 * (r - j)) * f.outlier->coordinate_moment(i, r - j);
            }
            return total;
          },
          [&](const family::CorruptedMixing& f) {
            const double gauss = r % 2 ? 0.0 : double_factorial_odd(r - 1) * std::pow(f.sigma2, r / 2);
            return (1.0 - f.eps) * gauss + f.eps * f.outlier->coordinate_moment(i, r);
          },
          [&](const family::LinearTransform& f) {
            Eigen::Index nonzero = 0, col = 0;
            for (Eigen::Index k = 0; k < f.A.cols(); ++k)
              if (f.A(i, k) != 0.0) ++nonzero, col = k;
            if (nonzero == 0) return 0.0;
            if (nonzero == 1)
              return std::pow(f.A(i, col), r) * f.base->coordinate_moment(static_cast<int>(col), r);
            if (f.base->is_gaussian())
              return r % 2 ? 0.0 : double_factorial_odd(r - 1) * std::pow(cov_(i, i), 0.5 * r);
            throw UnavailableError("moment unavailable: coordinate mixes several base coordinates");
          },
          [&](const family::IndependentSum&) -> double {
            if (is_gaussian())
              return r % 2 ? 0.0 : double_factorial_odd(r - 1) * std::pow(cov_(i, i), 0.5 * r);
            throw UnavailableError("moment unavailable for a non-Gaussian independent sum");
          },
          [&](const family::FinitePoints& f) {
            double total = 0.0;
            for (const auto& p : f.points) total += std::pow(p(i), r);
            return total / static_cast<double>(f.points.size());
          },
      },
      family_);
}

std::optional<double> CenteredLaw::log_density(const Vec& y) const {
  const int d = dim_;
  if (y.size() != d) throw ParameterError("log_density: dimension mismatch");
  const double ninf = -std::numeric_limits<double>::infinity();
  return std::visit(
      overloaded{
          [&](const family::GaussianIso& f) -> std::optional<double> {
            if (f.sigma2 <= 0.0) return std::nullopt;
            return -0.5 * d * std::log(2.0 * std::numbers::pi * f.sigma2) - 0.5 * y.squaredNorm() / f.sigma2;
          },
          [&](const family::StudentT& f) -> std::optional<double> {
            const double k = f.k;
            return std::lgamma(0.5 * (k + d)) - std::lgamma(0.5 * k) - 0.5 * d * std::log(k * std::numbers::pi) -
                   0.5 * d * std::log(f.dispersion) -
                   0.5 * (k + d) * std::log1p(y.squaredNorm() / (k * f.dispersion));
          },
          [&](const family::SphereUniform&) -> std::optional<double> { return std::nullopt; },
          [&](const family::BallUniform& f) -> std::optional<double> {
            const double radius = f.sigma * std::sqrt(static_cast<double>(d));
            if (y.norm() > radius) return ninf;
            const double log_volume = 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) +
                                      d * std::log(radius);
            return -log_volume;
          },
          [&](const family::ProductIID& f) -> std::optional<double> {
            double total = 0.0;
            for (int i = 0; i < d; ++i) total += f.coords[i].log_density(y(i));
            return total;
          },
          [&](const family::EllipticalScaled& f) -> std::optional<double> {
            const Vec z = f.chol.triangularView<Eigen::Lower>().solve(y);
            const double log_det = 2.0 * f.chol.diagonal().array().log().sum();
            return f.generator.log_normalizer() - 0.5 * log_det + f.generator.log_phi(0.5 * z.squaredNorm());
          },
          [&](const family::Mixture& f) -> std::optional<double> {
            std::vector<double> terms;
            for (std::size_t s = 0; s < f.components.size(); ++s) {
              if (f.weights[s] == 0.0) continue;
              const auto value = f.components[s]->log_density(y);
              if (!value) return std::nullopt;
              terms.push_back(std::log(f.weights[s]) + *value);
            }
            return detail::log_sum_exp(terms);
          },
          [&](const family::CorruptedAdditive& f) -> std::optional<double> {
            if (f.eps == 0.0) return gaussian_iso(d, f.sigma2)->log_density(y);
            if (f.outlier->is_gaussian() && f.outlier->covariance().isDiagonal()) {
              const Mat c = covariance();
              double total = 0.0;
              for (int i = 0; i < d; ++i)
                total += -0.5 * std::log(2.0 * std::numbers::pi * c(i, i)) - 0.5 * y(i) * y(i) / c(i, i);
              return total;
            }
            return std::nullopt;
          },
          [&](const family::CorruptedMixing& f) -> std::optional<double> {
            const double g = *gaussian_iso(d, f.sigma2)->log_density(y);
            if (f.eps == 0.0) return g;
            const auto o = f.outlier->log_density(y);
            if (!o) return std::nullopt;
            if (f.eps == 1.0) return *o;
            return detail::log_sum_exp({std::log1p(-f.eps) + g, std::log(f.eps) + *o});
          },
          [&](const family::LinearTransform& f) -> std::optional<double> {
            if (f.A.rows() != f.A.cols()) return std::nullopt;
            Eigen::PartialPivLU<Mat> lu(f.A);
            const double det = lu.determinant();
            if (det == 0.0) return std::nullopt;
            const auto base = f.base->log_density(lu.solve(y));
            if (!base) return std::nullopt;
            return *base - std::log(std::abs(det));
          },
          [&](const family::IndependentSum&) -> std::optional<double> {
            if (!is_gaussian()) return std::nullopt;
            Eigen::LLT<Mat> llt(cov_);
            if (llt.info() != Eigen::Success) return std::nullopt;
            const Mat L = llt.matrixL();
            const Vec z = L.triangularView<Eigen::Lower>().solve(y);
            return -0.5 * d * std::log(2.0 * std::numbers::pi) - L.diagonal().array().log().sum() -
                   0.5 * z.squaredNorm();
          },
          [&](const family::FinitePoints&) -> std::optional<double> { return std::nullopt; },
      },
      family_);
}

bool CenteredLaw::is_gaussian() const {
  return std::visit(
      overloaded{
          [](const family::GaussianIso&) { return true; },
          [](const family::ProductIID& f) {
            return std::all_of(f.coords.begin(), f.coords.end(),
                               [](const Law1D& l) { return l.kind() == Law1DKind::Gaussian; });
          },
          [](const family::EllipticalScaled& f) { return f.generator.kind == GeneratorKind::Gaussian; },
          [&](const family::Mixture& f) {
            for (const auto& c : f.components)
              if (!c->is_gaussian() || !c->covariance().isApprox(cov_, 1e-12)) return false;
            return true;
          },
          [](const family::CorruptedAdditive& f) { return f.eps == 0.0 || f.outlier->is_gaussian(); },
          [&](const family::CorruptedMixing& f) {
            return f.eps == 0.0 ||
                   (f.outlier->is_gaussian() && f.outlier->covariance().isApprox(cov_, 1e-12) &&
                    (f.eps == 1.0 || cov_.isApprox(f.sigma2 * Mat::Identity(dim_, dim_), 1e-12)));
          },
          [](const family::LinearTransform& f) { return f.base->is_gaussian(); },
          [](const family::IndependentSum& f) {
            for (std::size_t j = 0; j < f.parts.size(); ++j)
              if (f.scales[j] != 0.0 && !f.parts[j]->is_gaussian()) return false;
            return true;
          },
          [](const auto&) { return false; },
      },
      family_);
}

bool CenteredLaw::conditional_mean_zero() const {
  return std::visit(
      overloaded{
          [](const family::GaussianIso&) { return true; },
          [](const family::StudentT&) { return true; },
          [](const family::SphereUniform&) { return true; },
          [](const family::BallUniform&) { return true; },
          [](const family::ProductIID&) { return true; },
          // Symmetric under each coordinate sign flip when the dispersion is diagonal.
          [](const family::EllipticalScaled& f) { return f.dispersion.isDiagonal(); },
          [](const family::Mixture& f) {
            return std::all_of(f.components.begin(), f.components.end(),
                               [](const LawPtr& c) { return c->conditional_mean_zero(); });
          },
          [](const family::CorruptedAdditive& f) { return f.outlier->conditional_mean_zero(); },
          [](const family::CorruptedMixing& f) { return f.outlier->conditional_mean_zero(); },
          [](const family::LinearTransform& f) {
            if (f.A.rows() != f.A.cols() || !f.A.isDiagonal()) return false;
            return f.base->conditional_mean_zero();
          },
          [](const family::IndependentSum& f) {
            return std::all_of(f.parts.begin(), f.parts.end(),
                               [](const LawPtr& c) { return c->conditional_mean_zero(); });
          },
          [&](const family::FinitePoints& f) {
            // Sufficient: the point set is invariant under each coordinate reflection.
            for (int i = 0; i < dim_; ++i) {
              for (const auto& p : f.points) {
                Vec q = p;
                q(i) = -q(i);
                const bool found = std::any_of(f.points.begin(), f.points.end(),
                                               [&](const Vec& r) { return (r - q).norm() < 1e-12; });
                if (!found) return false;
              }
            }
            return true;
          },
      },
      family_);
}

bool CenteredLaw::density_bounded_near_origin() const {
  return std::visit(
      overloaded{
          [](const family::GaussianIso& f) { return f.sigma2 > 0.0; },
          [](const family::SphereUniform&) { return false; },
          [](const family::FinitePoints&) { return false; },
          [](const family::Mixture& f) {
            return std::all_of(f.components.begin(), f.components.end(),
                               [](const LawPtr& c) { return c->density_bounded_near_origin(); });
          },
          [](const family::CorruptedAdditive& f) {
            return f.eps < 1.0 ? f.sigma2 > 0.0 : f.outlier->density_bounded_near_origin();
          },
          [](const family::CorruptedMixing& f) {
            return (f.eps == 1.0 || f.sigma2 > 0.0) && (f.eps == 0.0 || f.outlier->density_bounded_near_origin());
          },
          [](const family::LinearTransform& f) {
            if (f.A.rows() != f.A.cols() || f.A.fullPivLu().rank() < f.A.rows()) return false;
            return f.base->density_bounded_near_origin();
          },
          [](const family::IndependentSum& f) {
            // A convolution is bounded as soon as one summand has a bounded density.
            for (std::size_t j = 0; j < f.parts.size(); ++j)
              if (f.scales[j] != 0.0 && f.parts[j]->density_bounded_near_origin()) return true;
            return false;
          },
          [](const auto&) { return true; },
      },
      family_);
}

std::optional<double> CenteredLaw::coordinate_bound(int i) const {
  const double sd = std::sqrt(static_cast<double>(dim_));
  return std::visit(
      overloaded{
          [&](const family::SphereUniform& f) -> std::optional<double> { return f.sigma * sd; },
          [&](const family::BallUniform& f) -> std::optional<double> { return f.sigma * sd; },
          [&](const family::ProductIID& f) { return f.coords[i].support_bound(); },
          [&](const family::FinitePoints& f) -> std::optional<double> {
            double m = 0.0;
            for (const auto& p : f.points) m = std::max(m, std::abs(p(i)));
            return m;
          },
          [&](const family::Mixture& f) -> std::optional<double> {
            double m = 0.0;
            for (const auto& c : f.components) {
              const auto b = c->coordinate_bound(i);
              if (!b) return std::nullopt;
              m = std::max(m, *b);
            }
            return m;
          },
          [&](const family::LinearTransform& f) -> std::optional<double> {
            double m = 0.0;
            for (Eigen::Index k = 0; k < f.A.cols(); ++k) {
              if (f.A(i, k) == 0.0) continue;
              const auto b = f.base->coordinate_bound(static_cast<int>(k));
              if (!b) return std::nullopt;
              m += std::abs(f.A(i, k)) * *b;
            }
            return m;
          },
          [&](const family::IndependentSum& f) -> std::optional<double> {
            double m = 0.0;
            for (std::size_t j = 0; j < f.parts.size(); ++j) {
              if (f.scales[j] == 0.0) continue;
              const auto b = f.parts[j]->coordinate_bound(i);
              if (!b) return std::nullopt;
              m += std::abs(f.scales[j]) * *b;
            }
            return m;
          },
          [](const auto&) -> std::optional<double> { return std::nullopt; },
      },
      family_);
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

LawPtr gaussian_iso(int d, double sigma2) {
  require(std::isfinite(sigma2) && sigma2 >= 0.0, "Gaussian variance must be nonnegative");
  return std::make_shared<CenteredLaw>(d, family::GaussianIso{sigma2});
}

LawPtr student_t(int d, double k, double dispersion) {
  require(k >= 5.0, "Student-t requires k >= 5");
  require(dispersion > 0.0, "Student-t dispersion must be positive");
  return std::make_shared<CenteredLaw>(d, family::StudentT{k, dispersion});
}

LawPtr sphere_uniform(int d, double sigma) {
  require(sigma >= 0.0, "sphere scale must be nonnegative");
  require(d >= 2, "sphere law requires d >= 2");
  return std::make_shared<CenteredLaw>(d, family::SphereUniform{sigma});
}

LawPtr ball_uniform(int d, double sigma) {
  require(sigma > 0.0, "ball scale must be positive");
  return std::make_shared<CenteredLaw>(d, family::BallUniform{sigma});
}

LawPtr product_iid(int d, const Law1D& law) {
  require(d >= 1, "dimension must be at least 1");
  return product(std::vector<Law1D>(static_cast<std::size_t>(d), law));
}

LawPtr product(std::vector<Law1D> coords) {
  require(!coords.empty(), "product law needs at least one coordinate");
  const int d = static_cast<int>(coords.size());
  return std::make_shared<CenteredLaw>(d, family::ProductIID{std::move(coords)});
}

LawPtr elliptical(const Generator& generator, const Mat& dispersion) {
  const auto d = dispersion.rows();
  require(dispersion.cols() == d && d >= 1, "dispersion must be square");
  require(generator.dim == d, "generator dimension must match the dispersion");
  require(dispersion.isApprox(dispersion.transpose(), 1e-12), "dispersion must be symmetric");
  if (generator.kind == GeneratorKind::Student) require(generator.param > 2.0, "Student generator needs k > 2");
  if (generator.kind == GeneratorKind::PowerTail)
    require(generator.param > 0.5 * d + 1.0, "power-tail generator needs a > d/2 + 1 for a finite covariance");
  Eigen::LLT<Mat> llt(dispersion);
  require(llt.info() == Eigen::Success, "dispersion must be positive definite");
  return std::make_shared<CenteredLaw>(static_cast<int>(d),
                                       family::EllipticalScaled{generator, dispersion, llt.matrixL()});
}

LawPtr mixture(std::vector<LawPtr> components, std::vector<double> weights) {
  require(!components.empty() && components.size() == weights.size(), "mixture needs one weight per component");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "mixture weights must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
  const int d = components.front()->dim();
  for (const auto& c : components) require(c && c->dim() == d, "mixture components must share the dimension");
  return std::make_shared<CenteredLaw>(d, family::Mixture{std::move(components), std::move(weights)});
}

LawPtr corrupted_additive(double eps, double sigma2, LawPtr outlier) {
  require(eps >= 0.0 && eps <= 1.0, "corruption level must lie in [0, 1]");
  require(sigma2 >= 0.0, "Gaussian variance must be nonnegative");
  require(outlier != nullptr, "outlier law required");
  const int d = outlier->dim();
  return std::make_shared<CenteredLaw>(d, family::CorruptedAdditive{eps, sigma2, std::move(outlier)});
}

LawPtr corrupted_mixing(double eps, double sigma2, LawPtr outlier) {
  require(eps >= 0.0 && eps <= 1.0, "corruption level must lie in [0, 1]");
  require(sigma2 >= 0.0, "Gaussian variance must be nonnegative");
  require(outlier != nullptr, "outlier law required");
  const int d = outlier->dim();
  return std::make_shared<CenteredLaw>(d, family::CorruptedMixing{eps, sigma2, std::move(outlier)});
}

LawPtr linear_transform(const Mat& A, LawPtr base) {
  require(base != nullptr, "base law required");
  require(A.cols() == base->dim() && A.rows() >= 1, "transform columns must match the base dimension");
  require(A.allFinite(), "transform entries must be finite");
  return std::make_shared<CenteredLaw>(static_cast<int>(A.rows()), family::LinearTransform{A, std::move(base)});
}

LawPtr independent_sum(std::vector<LawPtr> parts, std::vector<double> scales) {
  require(!parts.empty() && parts.size() == scales.size(), "independent sum needs one scale per part");
  const int d = parts.front()->dim();
  for (std::size_t j = 0; j < parts.size(); ++j) {
    require(parts[j] && parts[j]->dim() == d, "summands must share the dimension");
    require(std::isfinite(scales[j]), "summand scales must be finite");
  }
  return std::make_shared<CenteredLaw>(d, family::IndependentSum{std::move(parts), std::move(scales)});
}

LawPtr finite_points(std::vector<Vec> points) {
  require(!points.empty(), "finite law needs at least one point");
  const auto d = points.front().size();
  Vec mean = Vec::Zero(d);
  for (const auto& p : points) {
    require(p.size() == d, "points must share the dimension");
    mean += p;
  }
  require(mean.norm() / static_cast<double>(points.size()) <= 1e-12, "finite law must be centered");
  return std::make_shared<CenteredLaw>(static_cast<int>(d), family::FinitePoints{std::move(points)});
}

LawPtr scaled(const LawPtr& law, double c) {
  require(std::isfinite(c) && c > 0.0, "scale factor must be positive");
  const int d = law->dim();
  const double c2 = c * c;
  return std::visit(
      overloaded{
          [&](const family::GaussianIso& f) { return gaussian_iso(d, f.sigma2 * c2); },
          [&](const family::StudentT& f) { return student_t(d, f.k, f.dispersion * c2); },
          [&](const family::SphereUniform& f) { return sphere_uniform(d, f.sigma * c); },
          [&](const family::BallUniform& f) { return ball_uniform(d, f.sigma * c); },
          [&](const family::ProductIID& f) {
            std::vector<Law1D> coords;
            for (const auto& l : f.coords) coords.push_back(l.scaled(c2));
            return product(std::move(coords));
          },
          [&](const family::EllipticalScaled& f) { return elliptical(f.generator, f.dispersion * c2); },
          [&](const family::CorruptedAdditive& f) {
            return corrupted_additive(f.eps, f.sigma2 * c2, scaled(f.outlier, c));
          },
          [&](const family::CorruptedMixing& f) {
            return corrupted_mixing(f.eps, f.sigma2 * c2, scaled(f.outlier, c));
          },
          [&](const auto&) { return linear_transform(c * Mat::Identity(d, d), law); },
      },
      law->family());
}

// ---------------------------------------------------------------------------
// NoiseModel
// ---------------------------------------------------------------------------

NoiseModel::NoiseModel(LawPtr law, Vec theta, bool pinsker)
    : law_(std::move(law)), theta_(std::move(theta)), pinsker_(pinsker) {
  require(law_ != nullptr, "noise model needs a law");
  require(theta_.size() == law_->dim(), "theta dimension must match the law");
  require(theta_.allFinite(), "theta must be finite");
  if (pinsker_) law_ = scaled(law_, 1.0 / std::sqrt(static_cast<double>(law_->dim())));
}

void NoiseModel::draw(Rng& rng, Vec& out) const {
  out.resize(dim());
  law_->sample(rng, {out.data(), static_cast<std::size_t>(dim())});
  out += theta_;
}

Mat sample(const NoiseModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample size must be at least 1");
  Mat out(model.dim(), static_cast<Eigen::Index>(n));
  Vec x;
  for (std::size_t j = 0; j < n; ++j) {
    Rng rng(derive_seed(seed, j));
    model.draw(rng, x);
    out.col(static_cast<Eigen::Index>(j)) = x;
  }
  return out;
}

MomentSummary moments(const NoiseModel& model, bool with_high_moments) {
  MomentSummary m;
  m.mean = model.theta();
  m.cov = model.law().covariance();
  m.trace_cov = m.cov.trace();
  Eigen::SelfAdjointEigenSolver<Mat> eig(m.cov, Eigen::EigenvaluesOnly);
  m.kappa = eig.eigenvalues().maxCoeff();
  if (with_high_moments) {
    double c4 = 0.0, c8 = 0.0;
    for (int i = 0; i < model.dim(); ++i) {
      c4 = std::max(c4, model.law().coordinate_moment(i, 4));
      c8 = std::max(c8, model.law().coordinate_moment(i, 8));
    }
    m.c4 = c4;
    m.c8 = c8;
  }
  return m;
}

std::optional<double> log_density(const NoiseModel& model, const Vec& x) {
  return model.law().log_density(x - model.theta());
}

// ---------------------------------------------------------------------------
// Validity
// ---------------------------------------------------------------------------

namespace {

// Largest possible ||Y||, when the support is bounded.
std::optional<double> radius_bound(const CenteredLaw& law) {
  const double sd = std::sqrt(static_cast<double>(law.dim()));
  if (const auto* s = std::get_if<family::SphereUniform>(&law.family())) return s->sigma * sd;
  if (const auto* b = std::get_if<family::BallUniform>(&law.family())) return b->sigma * sd;
  if (const auto* f = std::get_if<family::FinitePoints>(&law.family())) {
    double r = 0.0;
    for (const auto& p : f->points) r = std::max(r, p.norm());
    return r;
  }
  if (const auto* f = std::get_if<family::LinearTransform>(&law.family())) {
    const auto base = radius_bound(*f->base);
    if (!base) return std::nullopt;
    return *base * Eigen::JacobiSVD<Mat>(f->A).singularValues()(0);
  }
  if (const auto* f = std::get_if<family::IndependentSum>(&law.family())) {
    double r = 0.0;
    for (std::size_t j = 0; j < f->parts.size(); ++j) {
      const auto part = radius_bound(*f->parts[j]);
      if (!part) return std::nullopt;
      r += std::abs(f->scales[j]) * *part;
    }
    return r;
  }
  if (const auto* f = std::get_if<family::Mixture>(&law.family())) {
    double r = 0.0;
    for (const auto& c : f->components) {
      const auto part = radius_bound(*c);
      if (!part) return std::nullopt;
      r = std::max(r, *part);
    }
    return r;
  }
  double sq = 0.0;
  for (int i = 0; i < law.dim(); ++i) {
    const auto b = law.coordinate_bound(i);
    if (!b) return std::nullopt;
    sq += *b * *b;
  }
  return std::sqrt(sq);
}

// Every support point of X has at least two coordinates of magnitude >= 2*delta > 0.
bool two_coordinates_away_from_zero(const NoiseModel& model) {
  const auto* f = std::get_if<family::FinitePoints>(&model.law().family());
  if (f == nullptr || model.dim() < 2) return false;
  for (const auto& p : f->points) {
    Vec a = (p + model.theta()).cwiseAbs();
    std::sort(a.begin(), a.end(), std::greater<>());
    if (!(a(1) > 0.0)) return false;
  }
  return true;
}

}  // namespace

bool coordinate_domination(const CenteredLaw& law) {
  return std::visit(
      overloaded{
          [](const family::GaussianIso& f) { return f.sigma2 > 0.0; },
          [](const family::StudentT&) { return true; },
          [](const family::BallUniform&) { return true; },
          [](const family::ProductIID&) { return true; },
          [](const family::EllipticalScaled& f) { return f.dispersion.isDiagonal(); },
          [](const family::Mixture& f) {
            return std::all_of(f.components.begin(), f.components.end(),
                               [](const LawPtr& c) { return coordinate_domination(*c); });
          },
          [](const family::CorruptedAdditive& f) {
            return f.eps < 1.0 ? f.sigma2 > 0.0 : coordinate_domination(*f.outlier);
          },
          [](const family::CorruptedMixing& f) {
            return (f.eps == 1.0 || f.sigma2 > 0.0) && (f.eps == 0.0 || coordinate_domination(*f.outlier));
          },
          [](const family::LinearTransform& f) {
            return f.A.rows() == f.A.cols() && f.A.isDiagonal() &&
                   (f.A.diagonal().array() != 0.0).all() && coordinate_domination(*f.base);
          },
          // A nondegenerate Gaussian summand smooths the sum: the density is
          // bounded by a Gaussian-in-y_i average, integrable against |y_i|.
          [](const family::IndependentSum& f) {
            for (std::size_t j = 0; j < f.parts.size(); ++j) {
              const auto* g = std::get_if<family::GaussianIso>(&f.parts[j]->family());
              if (g && g->sigma2 > 0.0 && f.scales[j] != 0.0) return true;
            }
            return f.parts.size() == 1 && coordinate_domination(*f.parts.front());
          },
          [](const auto&) { return false; },
      },
      law.family());
}

ValidityReport validity_check(const NoiseModel& model, ValidityNeed need) {
  ValidityReport report;
  const auto& law = model.law();
  const int d = model.dim();
  auto fail = [&](std::string reason) {
    report.ok = false;
    report.reasons.push_back(std::move(reason));
  };

  if (need == ValidityNeed::Kernel) {
    if (d < 5) {
      fail("d < 5");
      if (law.is_gaussian() && d >= 3)
        report.warnings.push_back("Gaussian law: the identity for g0 holds for d >= 3 by direct computation");
    }
    if (!law.density_bounded_near_origin()) fail("law has no density bounded near the origin");
    return report;
  }

  // Zero-bias: support bounded away from the origin works for any d >= 2.
  const auto radius = radius_bound(law);
  if (radius && model.theta().norm() > *radius) {
    report.warnings.push_back("support of X and of every X^i avoids the ball of radius " +
                              std::to_string(model.theta().norm() - *radius));
    return report;
  }
  if (two_coordinates_away_from_zero(model)) return report;

  if (!law.covariance().isDiagonal()) fail("covariance is not diagonal and the support is not separated from 0");
  if (!law.conditional_mean_zero()) fail("conditional mean zero property not established for this law");
  if (d < 5) fail("d < 5 and the support is not separated from 0");
  if (!coordinate_domination(law)) fail("no density with |y_i| p(y) dominated by an integrable g_i(y_i)");
  return report;
}

Vec parse_theta(const std::string& spec, int d) {
  require(d >= 1, "dimension must be at least 1");
  if (spec.empty() || spec == "zero") return Vec::Zero(d);
  if (spec.rfind("scaled:", 0) == 0) {
    const double c = detail::parse_double(spec.substr(7), "theta scale");
    return Vec::Constant(d, c / std::sqrt(static_cast<double>(d)));
  }
  if (spec.rfind("spikes:", 0) == 0) {
    const auto colon = spec.find(':', 7);
    require(colon != std::string::npos, "theta spikes spec must look like spikes:count:height");
    const double count = detail::parse_double(spec.substr(7, colon - 7), "theta spike count");
    const double height = detail::parse_double(spec.substr(colon + 1), "theta spike height");
    require(count >= 0 && count <= d && count == std::floor(count), "theta spike count must be an integer in [0, d]");
    Vec theta = Vec::Zero(d);
    theta.head(static_cast<Eigen::Index>(count)).setConstant(height);
    return theta;
  }
  std::ifstream in(spec);
  if (!in) throw ParameterError("cannot open theta file '" + spec + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    values.push_back(detail::parse_double(line.substr(first), "theta entry"));
  }
  require(static_cast<int>(values.size()) == d,
          "theta file has " + std::to_string(values.size()) + " entries, expected " + std::to_string(d));
  return Eigen::Map<Vec>(values.data(), d);
}

}  // namespace steinshrink
