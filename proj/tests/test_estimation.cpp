#include "doctest.h"

#include "steinshrink/estimation.hpp"

#include <cmath>

using namespace steinshrink;

namespace {

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

Vec random_vec(Rng& rng, int d, double scale) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * rng.normal();
  return v;
}

// Generic SURE from the Jacobian: Tr Sigma + ||f||^2 + 2 <Sigma, J>.
double sure_from_jacobian(const Vec& x, const EstimatorSpec& est, const Mat& sigma) {
  return sigma.trace() + est.shift(x).squaredNorm() + 2.0 * (sigma.array() * est.jacobian(x).array()).sum();
}

Mat numeric_jacobian(const EstimatorSpec& est, const Vec& x) {
  const double h = 1e-6;
  Mat J(x.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec up = x, down = x;
    up(j) += h;
    down(j) -= h;
    J.col(j) = (est.shift(up) - est.shift(down)) / (2.0 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("James-Stein estimator") {
  const Vec x = vec({2.0, 0.0, 0.0, 0.0});
  CHECK(james_stein(x, 2.0).isApprox(vec({1.0, 0.0, 0.0, 0.0})));
  CHECK(james_stein(x, 0.0) == x);
  CHECK(james_stein(x, 4.0).norm() == 0.0);
  CHECK_THROWS_AS(james_stein(Vec::Zero(4), 1.0), NumericalGuardError);
  CHECK(james_stein(Vec::Zero(4), 1.0, true).norm() == 0.0);
  CHECK(james_stein(Vec::Zero(4), 0.0).norm() == 0.0);
  CHECK_THROWS_AS(james_stein(x, -1.0), ParameterError);
}

TEST_CASE("soft thresholding") {
  const Vec x = vec({0.5, -3.0});
  CHECK(soft_threshold(x, 1.0).isApprox(vec({0.0, -2.0})));
  CHECK(soft_threshold(x, 0.0) == x);
  CHECK(soft_threshold(x, 3.0).norm() == 0.0);
  CHECK(soft_threshold(x, 10.0).norm() == 0.0);
}

TEST_CASE("SURE closed forms") {
  const Vec x = vec({2.0, 0.0, 0.0, 0.0});
  CHECK(sure(x, EstimatorSpec::james_stein(2.0), 1.0) == doctest::Approx(3.0));
  CHECK(sure(x, EstimatorSpec::james_stein(0.0), 2.0) == doctest::Approx(8.0));
  CHECK(sure(vec({0.5, 3.0}), EstimatorSpec::soft_threshold(1.0), 1.0) == doctest::Approx(1.25));
  // The divergence term carries sigma^2.
  CHECK(sure(vec({0.5, 3.0}), EstimatorSpec::soft_threshold(1.0), 2.0) == doctest::Approx(4.0 + 1.25 - 4.0));
  CHECK(sure(x, EstimatorSpec::identity(), 1.5) == doctest::Approx(6.0));
}

TEST_CASE("closed forms agree with the Jacobian route") {
  Rng rng(1);
  Mat L = Mat::Random(5, 5);
  const Mat sigma = L * L.transpose() + Mat::Identity(5, 5);
  for (int r = 0; r < 50; ++r) {
    const Vec x = random_vec(rng, 5, 2.0);
    const double lambda = 3.0 * rng.uniform();
    for (const auto& est : {EstimatorSpec::james_stein(lambda), EstimatorSpec::soft_threshold(lambda)}) {
      CAPTURE(est.name());
      CHECK(sure(x, est, sigma) == doctest::Approx(sure_from_jacobian(x, est, sigma)).epsilon(1e-12));
      CHECK(sure(x, est, 1.7) == doctest::Approx(sure(x, est, Mat(1.7 * Mat::Identity(5, 5)))).epsilon(1e-12));
      CHECK(est.divergence(x) == doctest::Approx(est.jacobian(x).trace()).epsilon(1e-12));
    }
    const auto js = EstimatorSpec::james_stein(lambda);
    CHECK((numeric_jacobian(js, x) - js.jacobian(x)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(js.divergence(x) == doctest::Approx(-lambda * 3.0 / x.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("risk expansion holds pointwise") {
  Rng rng(2);
  for (int r = 0; r < 100; ++r) {
    const int d = 2 + static_cast<int>(rng.index(10));
    const Vec x = random_vec(rng, d, 1.5);
    const Vec theta = random_vec(rng, d, 1.0);
    const double lambda = 5.0 * rng.uniform();
    const double s = x.squaredNorm();
    const double lhs = (james_stein(x, lambda) - theta).squaredNorm();
    const double rhs = (x - theta).squaredNorm() - 2.0 * lambda * (x - theta).dot(x) / s + lambda * lambda / s;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("soft thresholding is nonexpansive") {
  Rng rng(3);
  for (int r = 0; r < 200; ++r) {
    const Vec x = random_vec(rng, 8, 2.0), y = random_vec(rng, 8, 2.0);
    const double lambda = 2.0 * rng.uniform();
    const Vec sx = soft_threshold(x, lambda), sy = soft_threshold(y, lambda);
    CHECK((sx - sy).norm() <= (x - y).norm() + 1e-15);
    CHECK(((sx - sy).array().abs() <= (x - y).array().abs() + 1e-15).all());
  }
}

TEST_CASE("kernel SURE with the Gaussian kernel equals SURE") {
  const auto law = gaussian_iso(6, 1.3);
  const auto kernel = constant_kernel(law);
  Rng rng(4);
  const Vec theta = random_vec(rng, 6, 1.0);
  for (int r = 0; r < 20; ++r) {
    const Vec x = theta + random_vec(rng, 6, 1.0);
    for (const auto& est : {EstimatorSpec::james_stein(2.0), EstimatorSpec::soft_threshold(0.7)})
      CHECK(sure_kernel(x, theta, est, kernel) == doctest::Approx(sure(x, est, 1.3)).epsilon(1e-12));
  }
}

TEST_CASE("lambda grid") {
  const LambdaGrid grid;
  const auto pts = grid.points(100);
  REQUIRE(pts.size() == 512);
  CHECK(pts.front() == 0.0);
  CHECK(pts.back() == doctest::Approx(std::sqrt(2.0 * std::log(100.0))));
  const auto parsed = LambdaGrid::parse("3:64");
  CHECK(parsed.c == 3.0);
  CHECK(parsed.size == 64);
  CHECK_THROWS_AS(LambdaGrid::parse("3"), ParameterError);
  CHECK_THROWS_AS(LambdaGrid::parse("-1:10"), ParameterError);
}

TEST_CASE("SURE and loss paths match pointwise evaluation") {
  Rng rng(5);
  const int d = 40;
  const Vec theta = random_vec(rng, d, 2.0);
  const Vec x = theta + random_vec(rng, d, 1.0);
  const auto grid = LambdaGrid{2.0, 97}.points(d);
  const auto sure_path = soft_threshold_sure_path(x, 1.4, grid);
  const auto loss_path = soft_threshold_loss_path(x, theta, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto est = EstimatorSpec::soft_threshold(grid[g]);
    CHECK(sure_path[g] == doctest::Approx(sure(x, est, 1.4)).epsilon(1e-12));
    CHECK(loss_path[g] == doctest::Approx((est.apply(x) - theta).squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("lambda selection edge cases") {
  const LambdaGrid grid;
  const auto pts = grid.points(16);
  const auto at_zero = select_lambda(Vec::Zero(16), 1.0, grid, EstimatorKind::SoftThreshold);
  CHECK(at_zero.index == 1);
  CHECK(at_zero.lambda == pts[1]);
  CHECK(at_zero.sure == doctest::Approx(-16.0));
  const auto large = select_lambda(Vec::Constant(16, 100.0), 1.0, grid, EstimatorKind::SoftThreshold);
  CHECK(large.index == 0);
  CHECK(large.lambda == 0.0);
  // Ties resolve to the smallest lambda.
  const auto tie = select_lambda(Vec::Zero(4), 1.0, std::vector<double>{0.5, 1.0, 2.0}, EstimatorKind::SoftThreshold);
  CHECK(tie.lambda == 0.5);
}

// Once the step is small enough that at most one |x_i| falls between
// neighbouring grid points, halving it moves the minimum by at most
// 2 sigma^2 + 2 lambda step.
TEST_CASE("grid refinement moves the SURE minimum by at most the grid modulus") {
  Rng rng(6);
  const int d = 256;
  const double sigma2 = 1.0;
  for (int r = 0; r < 20; ++r) {
    Vec x = random_vec(rng, d, 1.0);
    x.head(10).array() += 4.0;
    const LambdaGrid coarse{2.0, 2048}, fine{2.0, 4095};
    const double step = coarse.points(d)[1];
    const auto a = select_lambda(x, sigma2, coarse, EstimatorKind::SoftThreshold);
    const auto b = select_lambda(x, sigma2, fine, EstimatorKind::SoftThreshold);
    CHECK(b.sure <= a.sure + 1e-12);  // the fine grid contains the coarse one
    CHECK(a.sure - b.sure <= 2.0 * sigma2 + 2.0 * a.lambda * step + 1e-12);
  }
}

TEST_CASE("estimator names and parsing") {
  CHECK(parse_estimator_kind("js") == EstimatorKind::JamesStein);
  CHECK(parse_estimator_kind("soft-threshold") == EstimatorKind::SoftThreshold);
  CHECK(parse_estimator_kind("identity") == EstimatorKind::Identity);
  CHECK_THROWS_AS(parse_estimator_kind("ridge"), ParameterError);
  CHECK(EstimatorSpec::james_stein(1.0).field().singular_at_origin);
  CHECK_FALSE(EstimatorSpec::james_stein(1.0, true).field().singular_at_origin);
}

TEST_CASE("zero-bias SURE matches the risk on the sphere") {
  const int d = 6;
  const auto law = sphere_uniform(d, 1.0);
  Vec theta = Vec::Zero(d);
  theta(0) = 3.0;
  const NoiseModel model(law, theta);
  const auto est = EstimatorSpec::james_stein(d - 2.0);
  const auto zb = sure_zero_bias_mean(model, est, couple_sphere(law), 200000, 7);
  // Independent MC risk with a different seed.
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  Rng rng(8);
  Vec draw;
  for (int r = 0; r < n; ++r) {
    model.draw(rng, draw);
    const double loss = (est.apply(draw) - theta).squaredNorm();
    sum += loss;
    sum2 += loss * loss;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(zb.mean - mean) < 4.0 * std::hypot(zb.std_error, se));
  CHECK_THROWS_AS(sure_zero_bias_mean(NoiseModel(sphere_uniform(d, 2.0), theta), est, couple_sphere(law), 10, 1),
                  ParameterError);
}
