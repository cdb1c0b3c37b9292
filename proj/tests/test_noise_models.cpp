#include "doctest.h"

#include "steinshrink/monte_carlo.hpp"
#include "steinshrink/noise_models.hpp"
#include "steinshrink/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace steinshrink;

namespace {

Vec zeros(int d) { return Vec::Zero(d); }

Mat sample_covariance(const Mat& draws, const Vec& center) {
  const Mat c = draws.colwise() - center;
  return c * c.transpose() / static_cast<double>(draws.cols() - 1);
}

}  // namespace

TEST_CASE("zero-variance Gaussian returns theta") {
  Vec theta(3);
  theta << 1.0, -2.0, 0.5;
  const NoiseModel model(gaussian_iso(3, 0.0), theta);
  const Mat draws = sample(model, 3, 1);
  for (int j = 0; j < 3; ++j) CHECK((draws.col(j) - theta).norm() == 0.0);
}

TEST_CASE("sphere draws lie on the radius sqrt(d) sphere") {
  const NoiseModel model(sphere_uniform(4, 1.0), zeros(4));
  const Mat draws = sample(model, 200, 3);
  for (int j = 0; j < draws.cols(); ++j) CHECK(draws.col(j).norm() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Student sample covariance is k/(k-2) Id") {
  const int d = 6;
  const NoiseModel model(student_t(d, 6.0), zeros(d));
  const std::size_t n = 200000;
  const Mat draws = sample(model, n, 5);
  const Mat cov = sample_covariance(draws, zeros(d));
  // Var(Y_i^2) = E Y^4 - 1.5^2 with E Y^4 = 3 * 1.5^2 * (k-2)/(k-4).
  const double var_sq = 3.0 * 2.25 * 2.0 - 2.25;
  const double se = std::sqrt(var_sq / n);
  for (int i = 0; i < d; ++i) CHECK(std::abs(cov(i, i) - 1.5) < 4.0 * se);
}

TEST_CASE("analytic moments") {
  CHECK(moments(NoiseModel(student_t(6, 6.0), zeros(6))).cov.isApprox(1.5 * Mat::Identity(6, 6)));
  const auto sphere = moments(NoiseModel(sphere_uniform(5, 2.0), zeros(5)));
  CHECK(sphere.cov.isApprox(4.0 * Mat::Identity(5, 5)));
  CHECK(sphere.trace_cov == doctest::Approx(20.0));
  CHECK(sphere.kappa == doctest::Approx(4.0));
  const auto mix = moments(NoiseModel(mixture({gaussian_iso(3, 1.0), gaussian_iso(3, 1.0)}, {0.5, 0.5}), zeros(3)));
  CHECK(mix.cov.isApprox(Mat::Identity(3, 3)));
  Mat A(2, 2);
  A << 1.0, 0.5, 0.0, 2.0;
  const auto lin = moments(NoiseModel(linear_transform(A, gaussian_iso(2, 3.0)), zeros(2)));
  CHECK(lin.cov.isApprox(3.0 * A * A.transpose()));
  const auto add = moments(NoiseModel(corrupted_additive(0.2, 1.0, student_t(4, 6.0, 4.0 / 6.0)), zeros(4)));
  CHECK(add.cov.isApprox(Mat::Identity(4, 4)));
}

TEST_CASE("moment caps obey Lyapunov and refuse missing moments") {
  const auto lap = moments(NoiseModel(product_iid(3, Law1D::laplace(1.0)), zeros(3)), true);
  REQUIRE(lap.c4);
  REQUIRE(lap.c8);
  CHECK(*lap.c4 == doctest::Approx(6.0));
  CHECK(*lap.c8 >= *lap.c4 * *lap.c4);
  CHECK(lap.kappa <= lap.trace_cov);
  CHECK_THROWS_AS(moments(NoiseModel(student_t(6, 6.0), zeros(6)), true), UnavailableError);
  const auto heavy = moments(NoiseModel(student_t(6, 10.0), zeros(6)), true);
  CHECK(*heavy.c8 >= *heavy.c4 * *heavy.c4);
}

TEST_CASE("parameter errors") {
  CHECK_THROWS_AS(student_t(5, 4.0), ParameterError);
  CHECK_THROWS_AS(corrupted_mixing(1.5, 1.0, gaussian_iso(3, 2.0)), ParameterError);
  CHECK_THROWS_AS(mixture({gaussian_iso(2, 1.0), gaussian_iso(2, 1.0)}, {0.5, 0.6}), ParameterError);
  Mat bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(elliptical(Generator::gaussian(2), bad), ParameterError);
}

TEST_CASE("log densities") {
  Vec theta(2);
  theta << 0.3, -1.0;
  const NoiseModel gauss(gaussian_iso(2, 1.0), theta);
  CHECK(*log_density(gauss, theta) == doctest::Approx(-std::log(2.0 * std::numbers::pi)));
  const NoiseModel ball(ball_uniform(3, 1.0), zeros(3));
  const double vol = 4.0 / 3.0 * std::numbers::pi * std::pow(std::sqrt(3.0), 3);
  Vec inside(3);
  inside << 0.5, 0.2, -0.1;
  CHECK(*log_density(ball, inside) == doctest::Approx(-std::log(vol)));
  CHECK_FALSE(log_density(NoiseModel(sphere_uniform(3, 1.0), zeros(3)), inside).has_value());
}

TEST_CASE("Student density integrates to one in two dimensions") {
  const NoiseModel model(student_t(2, 6.0), zeros(2));
  const double total = quad::integrate_tail(
      [&](double r) {
        Vec x(2);
        x << r, 0.0;
        return 2.0 * std::numbers::pi * r * std::exp(*log_density(model, x));
      },
      0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("closed-form and quadrature normalizers agree") {
  for (const auto& g : {Generator::gaussian(3), Generator::student(6.0, 4), Generator::student(7.5, 2)}) {
    CHECK(g.log_normalizer() == doctest::Approx(g.log_normalizer_quadrature()).epsilon(1e-9));
  }
}

TEST_CASE("univariate laws: moments and closed-form kernels") {
  for (const auto& law : {Law1D::gaussian(2.0), Law1D::laplace(2.0), Law1D::uniform(2.0),
                          Law1D::smoothed_rademacher(2.0)}) {
    CAPTURE(law.name());
    CHECK(law.moment(2) == doctest::Approx(2.0));
    const double w = law.support_bound().value_or(50.0);
    const double mass = quad::integrate([&](double y) { return law.density(y); }, -w, w);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    const double zb_mass = quad::integrate([&](double y) { return law.zero_bias_density(y); }, -50.0, 50.0);
    CHECK(zb_mass == doctest::Approx(1.0).epsilon(1e-8));
    for (double y : {-0.9, 0.0, 0.4, 1.1}) {
      CHECK(law.stein_kernel(y) == doctest::Approx(law.stein_kernel_quadrature(y)).epsilon(1e-9));
    }
  }
  const auto lap = Law1D::laplace(2.0);
  const double b = lap.laplace_scale();
  CHECK(lap.stein_kernel(0.7) == doctest::Approx(b * (0.7 + b)));
  const auto uni = Law1D::uniform(3.0);
  const double a = uni.uniform_half_width();
  CHECK(uni.stein_kernel(0.5) == doctest::Approx((a * a - 0.25) / 2.0));
}

TEST_CASE("validity checks") {
  CHECK(validity_check(NoiseModel(gaussian_iso(5, 1.0), zeros(5)), ValidityNeed::Kernel).ok);
  const auto low = validity_check(NoiseModel(gaussian_iso(4, 1.0), zeros(4)), ValidityNeed::Kernel);
  CHECK_FALSE(low.ok);
  REQUIRE_FALSE(low.reasons.empty());
  CHECK(low.reasons.front().find("d < 5") != std::string::npos);
  Vec far = Vec::Zero(4);
  far(0) = 4.5;  // ||theta|| > 2 sigma sqrt(d) = 4
  CHECK(validity_check(NoiseModel(sphere_uniform(4, 1.0), far), ValidityNeed::ZeroBias).ok);
  std::vector<Vec> pts;
  for (int i = 0; i < 2; ++i)
    for (double s : {-1.0, 1.0}) {
      Vec p = Vec::Zero(2);
      p(i) = s * std::sqrt(2.0);
      pts.push_back(p);
    }
  Vec spike = Vec::Zero(2);
  spike(0) = std::sqrt(2.0);
  CHECK_FALSE(validity_check(NoiseModel(finite_points(pts), spike), ValidityNeed::ZeroBias).ok);
}

TEST_CASE("sample means concentrate for every family") {
  for (int d : {3, 5, 10}) {
    const std::vector<LawPtr> laws = {gaussian_iso(d, 2.0), student_t(d, 6.0), sphere_uniform(d, 1.0),
                                      ball_uniform(d, 1.0), product_iid(d, Law1D::laplace(1.0)),
                                      corrupted_mixing(0.2, 1.0, student_t(d, 6.0, 4.0 / 6.0))};
    Vec theta = Vec::LinSpaced(d, -1.0, 1.0);
    for (const auto& law : laws) {
      CAPTURE(law->name());
      const NoiseModel model(law, theta);
      const std::size_t n = 100000;
      const Mat draws = sample(model, n, 17);
      const Vec mean = draws.rowwise().mean();
      const double tr = moments(model).trace_cov;
      CHECK((mean - theta).norm() < 4.0 * std::sqrt(tr / n));
    }
  }
}

TEST_CASE("mixing corruption with eps = 0 is Gaussian") {
  const int d = 3;
  const NoiseModel corrupted(corrupted_mixing(0.0, 1.0, student_t(d, 6.0)), zeros(d));
  const NoiseModel gauss(gaussian_iso(d, 1.0), zeros(d));
  const Mat a = sample(corrupted, 100000, 1);
  const Mat b = sample(gauss, 100000, 2);
  for (int i = 0; i < d; ++i) {
    std::vector<double> ra(a.cols()), rb(b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) ra[j] = a(i, j), rb[j] = b(i, j);
    CHECK(ks_two_sample(ra, rb).p_value > 0.001);
  }
}

TEST_CASE("Pinsker scaling divides the coordinate variance by d") {
  const int d = 50;
  const NoiseModel model(gaussian_iso(d, 2.0), zeros(d), true);
  CHECK(moments(model).cov(0, 0) == doctest::Approx(2.0 / d));
  const Mat draws = sample(model, 20000, 4);
  CHECK(draws.array().square().mean() == doctest::Approx(2.0 / d).epsilon(0.02));
}

TEST_CASE("theta parsing") {
  CHECK(parse_theta("zero", 4).norm() == 0.0);
  const Vec s = parse_theta("scaled:3", 9);
  CHECK(s(0) == doctest::Approx(1.0));
  CHECK(s.norm() == doctest::Approx(3.0));
  const Vec sp = parse_theta("spikes:2:5", 6);
  CHECK(sp(0) == 5.0);
  CHECK(sp(1) == 5.0);
  CHECK(sp.tail(4).norm() == 0.0);
  CHECK_THROWS_AS(parse_theta("spikes:7:1", 6), ParameterError);
  CHECK_THROWS_AS(parse_theta("scaled:x", 6), ParameterError);
}
