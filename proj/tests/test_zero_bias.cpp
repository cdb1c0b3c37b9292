#include "doctest.h"

#include "steinshrink/quadrature.hpp"
#include "steinshrink/zero_bias.hpp"

#include <cmath>
#include <numbers>

using namespace steinshrink;

namespace {

Vec zeros(int d) { return Vec::Zero(d); }

bool within(const RiskReport& r, double sigmas) { return std::abs(r.mean) <= sigmas * r.std_error + 1e-12; }

std::vector<VectorField> test_fields(int d) {
  Mat B = Mat::Identity(d, d);
  for (int i = 0; i + 1 < d; ++i) B(i, i + 1) = 0.5;
  return {linear_field(B, Vec::Ones(d)), coordinate_quadratic_field(), g0_field()};
}

double normal_pdf(double y) { return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi); }

std::vector<double> row(const Mat& m, int i) {
  std::vector<double> out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[j] = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("univariate zero-bias densities") {
  const auto rad = zb1d_discrete({-1.0, 1.0}, {0.5, 0.5});
  CHECK(rad(0.3) == doctest::Approx(0.5));
  CHECK(rad(-0.99) == doctest::Approx(0.5));
  CHECK(rad(1.2) == 0.0);
  const auto gauss = zb1d(normal_pdf, 1.0);
  for (double y : {-2.0, 0.0, 0.7}) CHECK(gauss(y) == doctest::Approx(normal_pdf(y)).epsilon(1e-9));
  const double b = 0.8;
  const auto lap = zb1d([&](double y) { return std::exp(-std::abs(y) / b) / (2.0 * b); }, 2.0 * b * b);
  for (double y : {-1.5, 0.0, 0.4, 3.0})
    CHECK(lap(y) == doctest::Approx((std::abs(y) + b) * std::exp(-std::abs(y) / b) / (4.0 * b * b)).epsilon(1e-9));
  CHECK(quad::integrate(lap, -40.0, 40.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(zb1d([](double y) { return normal_pdf(y - 1.0); }, 1.0), ParameterError);
}

TEST_CASE("multivariate zero-bias density of a product factorizes") {
  const auto law1 = Law1D::laplace(1.0);
  const auto p1 = zb_density(product_iid(1, law1), 0);
  CHECK(quad::integrate([&](double y) { return p1(Vec::Constant(1, y)); }, -40.0, 40.0) ==
        doctest::Approx(1.0).epsilon(1e-8));
  const auto p2 = zb_density(product_iid(2, law1), 0);
  Vec y(2);
  y << 0.3, -1.1;
  CHECK(p2(y) == doctest::Approx(law1.zero_bias_density(0.3) * law1.density(-1.1)).epsilon(1e-9));
  const auto g = zb_density(gaussian_iso(1, 1.0), 0);
  CHECK(g(Vec::Constant(1, 0.5)) == doctest::Approx(normal_pdf(0.5)).epsilon(1e-9));
  CHECK_THROWS_AS(zb_density(sphere_uniform(3, 1.0), 0), UnavailableError);
}

TEST_CASE("sphere coupling") {
  const int d = 4;
  const auto coupling = couple_sphere(sphere_uniform(d, 1.0));
  Rng rng(1);
  ZeroBiasDraw draw;
  double sum_r = 0.0, max_radius = 0.0;
  const int n = 100000;
  std::vector<double> coupled(n), direct(n);
  const auto ball = ball_uniform(d, 1.0);
  for (int r = 0; r < n; ++r) {
    coupling.draw(rng, draw);
    REQUIRE(draw.kind == ZeroBiasDraw::Kind::Common);
    const double radius = draw.common.norm();
    sum_r += radius / draw.y.norm();
    max_radius = std::max(max_radius, radius);
    coupled[r] = draw.common(0);
    direct[r] = ball->sample(rng)(0);
  }
  CHECK(sum_r / n == doctest::Approx(0.8).epsilon(0.005));
  CHECK(1.0 - sum_r / n <= 1.0 / d);
  CHECK(max_radius <= 2.0 + 1e-12);
  CHECK(ks_two_sample(coupled, direct).p_value > 0.001);
}

TEST_CASE("Student coupling has the Student marginal") {
  const int d = 6;
  const auto law = student_t(d, 6.0);
  const auto coupling = couple_student(law);
  Rng rng(2), other(3);
  ZeroBiasDraw draw;
  std::vector<double> a(50000), b(50000);
  for (std::size_t r = 0; r < a.size(); ++r) {
    coupling.draw(rng, draw);
    a[r] = draw.y(0);
    b[r] = law->sample(other)(0);
  }
  CHECK(ks_two_sample(a, b).p_value > 0.001);
}

TEST_CASE("index law") {
  Mat A(3, 3);
  A << 1.0, 0.3, 0.0, 0.0, 1.0, 0.3, 0.0, 0.0, 1.0;
  const auto coupling = zb_linear(A, couple_independent(product_iid(3, Law1D::laplace(1.0))));
  double total = 0.0;
  for (double p : coupling.index_law()) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(couple_independent(product_iid(3, Law1D::uniform(1.0))).pairs().size() == 3);
  Mat neg(2, 2);
  neg << 1.0, -0.5, 0.0, 1.0;
  CHECK_THROWS_AS(zb_linear(neg, couple_independent(product_iid(2, Law1D::laplace(1.0)))), ParameterError);
}

TEST_CASE("zero-bias identity residuals vanish for every construction") {
  const int d = 6;
  const std::size_t n = 100000;
  Mat A = Mat::Identity(d, d);
  for (int i = 0; i + 1 < d; ++i) A(i, i + 1) = 0.3;
  const std::vector<std::pair<std::string, ZeroBiasCoupling>> couplings = {
      {"sphere", couple_sphere(sphere_uniform(d, 1.0))},
      {"student", couple_student(student_t(d, 6.0))},
      {"independent", couple_independent(product_iid(d, Law1D::laplace(1.0)))},
      {"sum", default_coupling(corrupted_additive(0.3, 1.0, product_iid(d, Law1D::uniform(1.0))))},
      {"mixture", default_coupling(corrupted_mixing(0.3, 1.0, product_iid(d, Law1D::laplace(1.0))))},
      {"linear", zb_linear(A, couple_sphere(sphere_uniform(d, 1.0)))},
      {"square-bias", square_bias_coupling(product_iid(d, Law1D::smoothed_rademacher(1.0)))},
  };
  Vec theta = Vec::Zero(d);
  theta(0) = std::sqrt(4.0 * d);  // ||theta||^2 = 4 sigma^2 d
  for (const auto& [label, coupling] : couplings) {
    const NoiseModel model(coupling.law(), theta);
    for (const auto& f : test_fields(d)) {
      CAPTURE(label);
      CAPTURE(f.name);
      CHECK(within(zb_identity_residual(model, coupling, f, n, 21), 4.0));
    }
  }
}

TEST_CASE("sum projection gives the univariate zero-bias identity") {
  const auto coupling = couple_independent(product_iid(4, Law1D::laplace(1.0)));
  const auto r = sum_projection_residual(
      coupling, [](double w) { return std::sin(w) + 0.1 * w * w * w; },
      [](double w) { return std::cos(w) + 0.3 * w * w; }, 100000, 4);
  CHECK(within(r, 4.0));
}

TEST_CASE("Gaussian laws are fixed points") {
  const int d = 3;
  const auto law = product_iid(d, Law1D::gaussian(1.0));
  const NoiseModel model(law, zeros(d));
  const auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const auto built = zb_construct(model, 1, 100000, 5);
  CHECK(ks_one_sample(row(built.draws, 1), cdf).p_value > 0.001);
  const auto coupling = couple_independent(law);
  Rng rng(6);
  ZeroBiasDraw draw;
  std::vector<double> replaced(100000);
  for (auto& v : replaced) {
    coupling.draw(rng, draw);
    v = draw.replaced(0);
  }
  CHECK(ks_one_sample(replaced, cdf).p_value > 0.001);
}

TEST_CASE("marginal construction agrees with the independent coupling") {
  const int d = 3;
  const auto law = product_iid(d, Law1D::smoothed_rademacher(1.0));
  const NoiseModel model(law, zeros(d));
  const auto built = zb_construct(model, 0, 100000, 7);
  CHECK(built.method == "tabulated-inverse-cdf");
  const auto coupling = couple_independent(law);
  Rng rng(8);
  ZeroBiasDraw draw;
  std::vector<double> replaced(100000), untouched(100000);
  for (std::size_t r = 0; r < replaced.size(); ++r) {
    coupling.draw(rng, draw);
    replaced[r] = draw.replaced(0);
    untouched[r] = draw.y(1);
  }
  CHECK(ks_two_sample(row(built.draws, 0), replaced).p_value > 0.001);
  CHECK(ks_two_sample(row(built.draws, 1), untouched).p_value > 0.001);
  // Nearly uniform on [-a, a] for the lightly smoothed two-point law.
  const auto rows = row(built.draws, 0);
  double inside = 0.0;
  for (double v : rows) inside += std::abs(v) <= 1.0 ? 1.0 : 0.0;
  CHECK(inside / rows.size() > 0.9);
}

TEST_CASE("four-point law is rejected for g0") {
  std::vector<Vec> pts;
  for (int i = 0; i < 2; ++i)
    for (double s : {-1.0, 1.0}) {
      Vec p = Vec::Zero(2);
      p(i) = s * std::sqrt(2.0);
      pts.push_back(p);
    }
  const auto law = finite_points(pts);
  Vec theta = Vec::Zero(2);
  theta(0) = std::sqrt(2.0);
  const NoiseModel model(law, theta);
  CHECK_THROWS_AS(zb_identity_residual(model, default_coupling(law), g0_field(), 1000, 1), ValidityError);
}
