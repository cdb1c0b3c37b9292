#pragma once

#include <functional>

namespace steinshrink::quad {

inline constexpr double kDefaultRelTol = 1e-10;

/// Adaptive Gauss-Kronrod integral of f over [a, b]; either bound may be
/// infinite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = kDefaultRelTol);

/// Integral of f over [a, +inf).
double integrate_tail(const std::function<double(double)>& f, double a,
                      double rel_tol = kDefaultRelTol);

}  // namespace steinshrink::quad
