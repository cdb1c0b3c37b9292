#include "steinshrink/vector_fields.hpp"

namespace steinshrink {

VectorField linear_field(const Mat& B, const Vec& c) {
  if (B.rows() != B.cols() || c.size() != B.rows()) throw ParameterError("linear field needs square B and matching c");
  VectorField f;
  f.name = "linear";
  f.value = [B, c](const Vec& x) -> Vec { return B * x + c; };
  f.jacobian = [B](const Vec&) -> Mat { return B; };
  f.partial = [B](const Vec&, int i, int j) { return B(i, j); };
  return f;
}

VectorField coordinate_quadratic_field() {
  VectorField f;
  f.name = "coordinate-quadratic";
  f.value = [](const Vec& x) -> Vec { return x.array().square().matrix(); };
  f.jacobian = [](const Vec& x) -> Mat { return (2.0 * x).asDiagonal(); };
  f.partial = [](const Vec& x, int i, int j) { return i == j ? 2.0 * x(i) : 0.0; };
  return f;
}

VectorField g0_field() {
  VectorField f;
  f.name = "g0";
  f.singular_at_origin = true;
  f.value = [](const Vec& x) -> Vec { return x / x.squaredNorm(); };
  f.jacobian = [](const Vec& x) -> Mat {
    const double s = x.squaredNorm();
    Mat J = Mat::Identity(x.size(), x.size()) / s;
    J.noalias() -= (2.0 / (s * s)) * x * x.transpose();
    return J;
  };
  f.partial = [](const Vec& x, int i, int j) {
    const double s = x.squaredNorm();
    return (i == j ? 1.0 / s : 0.0) - 2.0 * x(i) * x(j) / (s * s);
  };
  return f;
}

VectorField sum_projection_field(std::function<double(double)> h, std::function<double(double)> h_prime,
                                 std::string name) {
  VectorField f;
  f.name = std::move(name);
  f.value = [h](const Vec& x) -> Vec { return Vec::Constant(x.size(), h(x.sum())); };
  f.jacobian = [h_prime](const Vec& x) -> Mat { return Mat::Constant(x.size(), x.size(), h_prime(x.sum())); };
  f.partial = [h_prime](const Vec& x, int, int) { return h_prime(x.sum()); };
  return f;
}

}  // namespace steinshrink
