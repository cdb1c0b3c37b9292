#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace steinshrink {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.3.0";

/// Invalid family parameters, dimensions, or hypotheses.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An identity was requested for a test function that the model's validity
/// check does not admit.
class ValidityError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// A quantity (moment, density, kernel value) that the law does not provide.
class UnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singularity guard tripped (evaluation too close to the origin, too many
/// singular draws in a Monte Carlo run).
class NumericalGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Squared-norm threshold below which x/||x||^2 is treated as singular.
inline constexpr double kSingularNorm2 = 1e-12;

}  // namespace steinshrink
