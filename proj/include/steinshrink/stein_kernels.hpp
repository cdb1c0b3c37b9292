#pragma once

#include "steinshrink/monte_carlo.hpp"
#include "steinshrink/noise_models.hpp"
#include "steinshrink/vector_fields.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace steinshrink {

/// Value of a Stein kernel at one point. Kept in the cheapest exact shape
/// (multiple of the identity, diagonal, or full) so high-dimensional
/// discrepancy runs never form d x d matrices.
class KernelValue {
 public:
  enum class Shape { Scalar, Diagonal, Full };

  KernelValue() = default;
  static KernelValue scalar(double s, int d);
  static KernelValue diagonal(Vec diag);
  static KernelValue full(Mat m);

  Shape shape() const { return shape_; }
  int dim() const { return dim_; }
  double trace() const;
  /// <T, M> = sum_ij T_ij M_ij.
  double contract(const Mat& M) const;
  /// <T, J> for a field given entrywise by its partials at x.
  double contract(const VectorField& f, const Vec& x) const;
  /// x' T x.
  double quadratic(const Vec& x) const;
  /// ||T - S||_F^2.
  double frobenius_distance2(const Mat& S) const;
  Mat to_matrix() const;

  KernelValue& operator+=(const KernelValue& other);
  KernelValue& operator*=(double c);
  /// A T A'.
  KernelValue congruence(const Mat& A) const;

 private:
  Shape shape_ = Shape::Scalar;
  int dim_ = 0;
  double scalar_ = 0.0;
  Vec diag_;
  Mat full_;
};

enum class KernelConstruction {
  Constant,
  EllipticalRadial,
  StudentClosedForm,
  ProductDiagonal,
  Transformed,
  Average,
  Sum,
  Mixture,
};

std::string to_string(KernelConstruction c);

/// Stein kernel T for a centered law: E<Y, f(Y)> = E<T, grad f(Y)>.
///
/// Pointwise kernels (functions of y alone) expose evaluate(). Average, sum and
/// mixture kernels depend on auxiliary randomness (the individual copies, the
/// mixture label), so they are only available as joint draws (Y, T).
class SteinKernel {
 public:
  using Evaluate = std::function<KernelValue(const Vec&)>;
  using JointDraw = std::function<void(Rng&, Vec& y, KernelValue& t)>;

  SteinKernel(KernelConstruction construction, LawPtr law, Mat mean, Evaluate evaluate, JointDraw joint = {});

  KernelConstruction construction() const { return construction_; }
  const LawPtr& law() const { return law_; }
  int dim() const { return law_->dim(); }
  /// E[T], equal to Cov(Y).
  const Mat& mean() const { return mean_; }
  bool pointwise() const { return static_cast<bool>(evaluate_); }

  /// T(y) for centered y; throws UnavailableError for joint-only kernels.
  KernelValue evaluate(const Vec& y) const;
  /// Joint draw of (Y, T).
  void draw(Rng& rng, Vec& y, KernelValue& t) const;

 private:
  KernelConstruction construction_;
  LawPtr law_;
  Mat mean_;
  Evaluate evaluate_;
  JointDraw joint_;
};

/// How the elliptical tail integral is computed.
enum class TailMethod { Closed, Quadrature };

/// T(y) = Sigma for Gaussian laws.
SteinKernel constant_kernel(LawPtr gaussian_law);
/// T(y) = [int_{q/2}^inf phi / phi(q/2)] * Ups with q = y' Ups^{-1} y.
/// Accepts EllipticalScaled, StudentT, GaussianIso and BallUniform laws.
SteinKernel elliptical_kernel(LawPtr law, TailMethod method = TailMethod::Quadrature);
/// T(y) = (|y|^2 + k s^2)/(d + k - 2) Id for StudentT(k, dispersion s^2).
SteinKernel student_kernel(LawPtr student_law);
/// T(y) = diag(T_1(y_1), ..., T_d(y_d)) for ProductIID laws.
SteinKernel product_kernel(LawPtr product_law, TailMethod method = TailMethod::Closed);
/// Kernel of A Y: y -> A T(A^{-1} y) A'. A must be square and invertible.
SteinKernel transform_kernel(const SteinKernel& base, const Mat& A);
/// Kernel of (Y_1 + ... + Y_n)/sqrt(n) for independent copies with kernels
/// T_i, given jointly by (1/n) sum_i T_i(Y_i). All components must share Sigma.
SteinKernel average_kernel(const std::vector<SteinKernel>& kernels);
SteinKernel average_kernel(const SteinKernel& kernel, int copies);
/// Kernel of sum_j c_j Y_j for independent Y_j: sum_j c_j^2 T_j(Y_j).
SteinKernel sum_kernel(const std::vector<SteinKernel>& kernels, const std::vector<double>& scales);
/// Mixture: draw the label s, then (Y_s, T_s(Y_s)).
SteinKernel mixture_kernel(const std::vector<SteinKernel>& kernels, const std::vector<double>& weights);

/// A kernel for the law, chosen by family; throws UnavailableError for laws
/// without a density-based kernel (sphere, finite support).
SteinKernel default_kernel(const LawPtr& law);

struct DiscrepancyStats {
  double e_trace_T = 0.0;
  double e_trace_T_stderr = 0.0;
  double var_trace_T = 0.0;
  double var_trace_T_stderr = 0.0;
  double e_frob_T_minus_Sigma_sq = 0.0;
  double e_frob_T_minus_Sigma_sq_stderr = 0.0;
  std::size_t n = 0;
};

/// Monte Carlo estimates of E Tr T, Var Tr T and E||T - Sigma||^2, where Sigma
/// defaults to kernel.mean().
DiscrepancyStats discrepancy_stats(const SteinKernel& kernel, std::size_t n, std::uint64_t seed);
DiscrepancyStats discrepancy_stats(const SteinKernel& kernel, const Mat& reference, std::size_t n,
                                   std::uint64_t seed);

/// Monte Carlo estimate of E<X - theta, f(X)> - E<T(X - theta), grad f(X)>.
/// For fields singular at the origin the model must pass
/// validity_check(Kernel); otherwise ValidityError is thrown.
RiskReport stein_identity_residual(const NoiseModel& model, const SteinKernel& kernel, const VectorField& f,
                                   std::size_t n, std::uint64_t seed);

}  // namespace steinshrink
