#include "steinshrink/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace steinshrink::quad {

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, rel_tol, &error);
}

double integrate_tail(const std::function<double(double)>& f, double a, double rel_tol) {
  return integrate(f, a, std::numeric_limits<double>::infinity(), rel_tol);
}

}  // namespace steinshrink::quad
