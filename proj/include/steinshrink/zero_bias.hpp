#pragma once

#include "steinshrink/monte_carlo.hpp"
#include "steinshrink/noise_models.hpp"
#include "steinshrink/vector_fields.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace steinshrink {

// ---------------------------------------------------------------------------
// Univariate zero-bias densities
// ---------------------------------------------------------------------------

/// p*(y) = sigma^{-2} int_y^inf u p(u) du for a mean-zero density p on
/// [lower, upper], by quadrature. Throws ParameterError when p is not a
/// mean-zero density with variance sigma2.
std::function<double(double)> zb1d(std::function<double(double)> density, double sigma2,
                                   double lower = -std::numeric_limits<double>::infinity(),
                                   double upper = std::numeric_limits<double>::infinity());

/// Zero-bias density of a finitely supported mean-zero law:
/// p*(y) = sigma^{-2} sum_{x_k > y} x_k p_k (a step function).
std::function<double(double)> zb1d_discrete(std::vector<double> points, std::vector<double> probs);

// ---------------------------------------------------------------------------
// Multivariate zero-bias vectors
// ---------------------------------------------------------------------------

enum class CouplingConstruction {
  IndependentReplace,
  SquareBiasScale,
  SphereBall,
  StudentGamma,
  Sum,
  Mixture,
  LinearMap,
};

std::string to_string(CouplingConstruction c);

/// One joint draw of the centered vector Y and its zero-bias vectors Y^{ij}.
struct ZeroBiasDraw {
  enum class Kind {
    Common,             // every Y^{ij} equals `common`
    CoordinateReplace,  // Y^i is Y with coordinate i replaced by replaced(i)
    PerPair,            // per_pair[p] is Y^{ij} for pair p
  };
  Kind kind = Kind::PerPair;
  Vec y;
  Vec common;
  Vec replaced;
  std::vector<Vec> per_pair;

  /// Y^{ij} for pair index p = (i, j).
  Vec vector(std::size_t p, int i) const;
};

/// Collection {Y^{ij} : sigma_ij != 0} with the zero-bias property
/// E<Y, f(Y)> = sum_ij sigma_ij E[d_j f_i(Y^{ij})].
class ZeroBiasCoupling {
 public:
  using Draw = std::function<void(Rng&, ZeroBiasDraw&)>;

  ZeroBiasCoupling(CouplingConstruction construction, LawPtr law, Draw draw);

  CouplingConstruction construction() const { return construction_; }
  const LawPtr& law() const { return law_; }
  int dim() const { return law_->dim(); }
  const Mat& sigma() const { return sigma_; }
  /// Pairs (i, j) with sigma_ij != 0, in row-major order.
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  bool diagonal() const { return diagonal_; }
  /// P(I=i, J=j) = sigma_ij / sum_kl sigma_kl, one entry per pair; throws
  /// ParameterError when some sigma_ij is negative.
  std::vector<double> index_law() const;

  void draw(Rng& rng, ZeroBiasDraw& out) const { draw_(rng, out); }

 private:
  CouplingConstruction construction_;
  LawPtr law_;
  Mat sigma_;
  std::vector<std::pair<int, int>> pairs_;
  bool diagonal_;
  Draw draw_;
};

/// Independent coordinates: Y^i replaces Y_i by an independent draw from its
/// univariate zero-bias law. ProductIID laws only.
ZeroBiasCoupling couple_independent(const LawPtr& product_law);
/// X = theta + sigma sqrt(d) U, X^i = theta + sigma sqrt(d) R U with R of
/// density d r^{d-1} on [0, 1], the same for every i.
ZeroBiasCoupling couple_sphere(const LawPtr& sphere_law);
/// Y = s N / sqrt(delta + eps), Y^i = s N / sqrt(delta) with
/// delta ~ Gamma(k/2 - 1, k/2), eps ~ Gamma(1, k/2).
ZeroBiasCoupling couple_student(const LawPtr& student_law);
/// Y = sum_j c_j Y_j (independent, diagonal covariances): Y^i replaces
/// summand j, chosen with probability c_j^2 sigma_{j,i}^2 / sigma_i^2, by its
/// zero-bias vector.
ZeroBiasCoupling zb_sum(const std::vector<ZeroBiasCoupling>& parts, const std::vector<double>& scales);
/// Mixture with weights mu: Y^i is drawn from component s with probability
/// proportional to mu_s sigma_{s,i}^2.
ZeroBiasCoupling zb_mixture(const std::vector<ZeroBiasCoupling>& parts, const std::vector<double>& weights);
/// X^{ij} = theta + A U^{kl} with (k, l) drawn with probability
/// a_ik gamma_kl a_jl / sigma_ij. Negative products are rejected.
ZeroBiasCoupling zb_linear(const Mat& A, const ZeroBiasCoupling& base);
/// Marginal construction Y^i = D_{i,U} Ysq^i from the square-biased law
/// (y_i^2 / sigma_i^2) dnu; Y and the Y^i are drawn independently.
ZeroBiasCoupling square_bias_coupling(const LawPtr& law);

/// A coupling for the law, chosen by family.
ZeroBiasCoupling default_coupling(const LawPtr& law);

struct ZbConstructResult {
  Mat draws;           // d x n, draws of X^i
  std::string method;  // "tabulated-inverse-cdf", "rejection" or "importance-resampling"
  double mean_effective_sample_size = 0.0;  // importance resampling only
};

/// n draws of X^i = theta + D_{i,U} Ysq^i for a law with the conditional
/// mean zero property.
ZbConstructResult zb_construct(const NoiseModel& model, int i, std::size_t n, std::uint64_t seed);

/// Density p^i(y) = sigma_i^{-2} int_{y_i}^inf u p(y_1, .., u, .., y_d) du of
/// Y^i. Throws UnavailableError when |y_i| p(y) is not dominated.
std::function<double(const Vec&)> zb_density(const LawPtr& law, int i);

/// sum_ij sigma_ij d_j f_i(theta + Y^{ij}) for one joint draw. Returns false
/// when an evaluation point is singular for f.
bool zb_weighted_partials(const ZeroBiasCoupling& coupling, const ZeroBiasDraw& draw, const Vec& theta,
                          const VectorField& f, double& out);

/// Monte Carlo estimate of E<X - theta, f(X)> - sum_ij sigma_ij E[d_j f_i(X^{ij})].
/// Fields singular at the origin require validity_check(ZeroBias).
RiskReport zb_identity_residual(const NoiseModel& model, const ZeroBiasCoupling& coupling, const VectorField& f,
                                std::size_t n, std::uint64_t seed);

/// Residual of E[W h(W)] = s^2 E[h'(W^{IJ})] for W = sum_i Y_i, where W^{IJ}
/// is the coordinate sum of Y^{IJ} with (I, J) from the index law.
RiskReport sum_projection_residual(const ZeroBiasCoupling& coupling, const std::function<double(double)>& h,
                                   const std::function<double(double)>& h_prime, std::size_t n,
                                   std::uint64_t seed);

}  // namespace steinshrink
