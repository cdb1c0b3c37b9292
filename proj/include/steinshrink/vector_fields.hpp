#pragma once

#include "steinshrink/core.hpp"

#include <functional>
#include <string>

namespace steinshrink {

/// Vector field f : R^d -> R^d with its Jacobian (J_ij = d f_i / d x_j),
/// used as a test function in Stein and zero-bias identities.
struct VectorField {
  std::string name;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  /// Single entry d f_i / d x_j; defaults to jacobian(x)(i, j).
  std::function<double(const Vec&, int, int)> partial;
  /// The field is singular at the origin (evaluation guarded by kSingularNorm2).
  bool singular_at_origin = false;

  double partial_at(const Vec& x, int i, int j) const {
    return partial ? partial(x, i, j) : jacobian(x)(i, j);
  }
};

/// f(x) = B x + c.
VectorField linear_field(const Mat& B, const Vec& c);
/// f_i(x) = x_i^2, Jacobian diag(2 x_i).
VectorField coordinate_quadratic_field();
/// g0(x) = x / ||x||^2, Jacobian Id/||x||^2 - 2 x x' / ||x||^4.
VectorField g0_field();
/// f(y) = h(sum_i y_i) * (1, ..., 1); used to reduce the multivariate
/// zero-bias identity to the univariate one for W = sum_i Y_i.
VectorField sum_projection_field(std::function<double(double)> h, std::function<double(double)> h_prime,
                                 std::string name);

}  // namespace steinshrink
