#include "steinshrink/stein_kernels.hpp"

#include "steinshrink/quadrature.hpp"
#include "util.hpp"

#include <cmath>
#include <sstream>

namespace steinshrink {

// ---------------------------------------------------------------------------
// KernelValue
// ---------------------------------------------------------------------------

KernelValue KernelValue::scalar(double s, int d) {
  KernelValue v;
  v.shape_ = Shape::Scalar;
  v.dim_ = d;
  v.scalar_ = s;
  return v;
}

KernelValue KernelValue::diagonal(Vec diag) {
  KernelValue v;
  v.shape_ = Shape::Diagonal;
  v.dim_ = static_cast<int>(diag.size());
  v.diag_ = std::move(diag);
  return v;
}

KernelValue KernelValue::full(Mat m) {
  KernelValue v;
  v.shape_ = Shape::Full;
  v.dim_ = static_cast<int>(m.rows());
  v.full_ = std::move(m);
  return v;
}

double KernelValue::trace() const {
  switch (shape_) {
    case Shape::Scalar: return scalar_ * dim_;
    case Shape::Diagonal: return diag_.sum();
    case Shape::Full: return full_.trace();
  }
  return 0.0;
}

double KernelValue::contract(const Mat& M) const {
  switch (shape_) {
    case Shape::Scalar: return scalar_ * M.trace();
    case Shape::Diagonal: return diag_.dot(M.diagonal());
    case Shape::Full: return full_.cwiseProduct(M).sum();
  }
  return 0.0;
}

double KernelValue::contract(const VectorField& f, const Vec& x) const {
  double total = 0.0;
  switch (shape_) {
    case Shape::Scalar:
      for (int i = 0; i < dim_; ++i) total += f.partial_at(x, i, i);
      return scalar_ * total;
    case Shape::Diagonal:
      for (int i = 0; i < dim_; ++i) total += diag_(i) * f.partial_at(x, i, i);
      return total;
    case Shape::Full: return contract(f.jacobian(x));
  }
  return 0.0;
}

double KernelValue::quadratic(const Vec& x) const {
  switch (shape_) {
    case Shape::Scalar: return scalar_ * x.squaredNorm();
    case Shape::Diagonal: return diag_.dot(x.cwiseAbs2());
    case Shape::Full: return x.dot(full_ * x);
  }
  return 0.0;
}

double KernelValue::frobenius_distance2(const Mat& S) const {
  if (shape_ == Shape::Full) return (full_ - S).squaredNorm();
  const double off = S.squaredNorm() - S.diagonal().squaredNorm();
  if (shape_ == Shape::Scalar) return (S.diagonal().array() - scalar_).square().sum() + off;
  return (diag_ - S.diagonal()).squaredNorm() + off;
}

Mat KernelValue::to_matrix() const {
  switch (shape_) {
    case Shape::Scalar: return scalar_ * Mat::Identity(dim_, dim_);
    case Shape::Diagonal: return diag_.asDiagonal();
    case Shape::Full: return full_;
  }
  return {};
}

KernelValue& KernelValue::operator+=(const KernelValue& other) {
  if (dim_ == 0) return *this = other;
  if (other.dim_ != dim_) throw ParameterError("kernel values of different dimensions");
  if (shape_ == Shape::Scalar && other.shape_ == Shape::Scalar) {
    scalar_ += other.scalar_;
  } else if (shape_ != Shape::Full && other.shape_ != Shape::Full) {
    Vec a = shape_ == Shape::Scalar ? Vec::Constant(dim_, scalar_) : diag_;
    a += other.shape_ == Shape::Scalar ? Vec::Constant(dim_, other.scalar_) : other.diag_;
    *this = diagonal(std::move(a));
  } else {
    *this = full(to_matrix() + other.to_matrix());
  }
  return *this;
}

KernelValue& KernelValue::operator*=(double c) {
  scalar_ *= c;
  if (diag_.size()) diag_ *= c;
  if (full_.size()) full_ *= c;
  return *this;
}

KernelValue KernelValue::congruence(const Mat& A) const {
  if (A.rows() == A.cols() && A.isDiagonal() && shape_ != Shape::Full) {
    const Vec a2 = A.diagonal().array().square();
    return diagonal((shape_ == Shape::Scalar ? Vec::Constant(dim_, scalar_) : diag_).cwiseProduct(a2));
  }
  return full(A * to_matrix() * A.transpose());
}

// ---------------------------------------------------------------------------
// SteinKernel
// ---------------------------------------------------------------------------

std::string to_string(KernelConstruction c) {
  switch (c) {
    case KernelConstruction::Constant: return "constant";
    case KernelConstruction::EllipticalRadial: return "elliptical";
    case KernelConstruction::StudentClosedForm: return "student-closed-form";
    case KernelConstruction::ProductDiagonal: return "product-diagonal";
    case KernelConstruction::Transformed: return "transformed";
    case KernelConstruction::Average: return "average";
    case KernelConstruction::Sum: return "sum";
    case KernelConstruction::Mixture: return "mixture";
  }
  return "unknown";
}

SteinKernel::SteinKernel(KernelConstruction construction, LawPtr law, Mat mean, Evaluate evaluate, JointDraw joint)
    : construction_(construction),
      law_(std::move(law)),
      mean_(std::move(mean)),
      evaluate_(std::move(evaluate)),
      joint_(std::move(joint)) {
  if (!evaluate_ && !joint_) throw ParameterError("kernel needs a pointwise evaluation or a joint sampler");
}

KernelValue SteinKernel::evaluate(const Vec& y) const {
  if (!evaluate_)
    throw UnavailableError("the " + to_string(construction_) + " kernel is only available through joint draws");
  return evaluate_(y);
}

void SteinKernel::draw(Rng& rng, Vec& y, KernelValue& t) const {
  if (joint_) {
    joint_(rng, y, t);
    return;
  }
  y = law_->sample(rng);
  t = evaluate_(y);
}

// ---------------------------------------------------------------------------
// Constructions
// ---------------------------------------------------------------------------

SteinKernel constant_kernel(LawPtr law) {
  if (!law->is_gaussian()) throw ParameterError("the constant kernel is a Stein kernel only for Gaussian laws");
  const Mat sigma = law->covariance();
  const int d = law->dim();
  const bool isotropic = sigma.isDiagonal(0.0) && (sigma.diagonal().array() == sigma(0, 0)).all();
  KernelValue value = isotropic ? KernelValue::scalar(sigma(0, 0), d)
                                : (sigma.isDiagonal() ? KernelValue::diagonal(sigma.diagonal()) : KernelValue::full(sigma));
  return {KernelConstruction::Constant, std::move(law), sigma, [value](const Vec&) { return value; }};
}

namespace {

// Scalar factor [int_t^inf phi] / phi(t) of the elliptical kernel.
double elliptical_factor(const Generator& g, double t, TailMethod method) {
  if (!std::isfinite(g.log_phi(t)) || g.phi(t) == 0.0)
    throw UnavailableError("elliptical kernel evaluated where the generator vanishes");
  if (method == TailMethod::Closed) {
    switch (g.kind) {
      case GeneratorKind::Gaussian: return 1.0;
      case GeneratorKind::Student: return (g.param + 2.0 * t) / (g.param + g.dim - 2.0);
      case GeneratorKind::PowerTail: return (1.0 + t) / (g.param - 1.0);
    }
  }
  // Integrate the ratio phi(u)/phi(t) so nothing underflows far in the tail.
  const double log_phi_t = g.log_phi(t);
  return quad::integrate_tail([&](double u) { return std::exp(g.log_phi(u) - log_phi_t); }, t);
}

}  // namespace

SteinKernel elliptical_kernel(LawPtr law, TailMethod method) {
  const int d = law->dim();
  const Mat sigma = law->covariance();
  if (const auto* b = std::get_if<family::BallUniform>(&law->family())) {
    // phi = 1{t <= R^2/2} with Ups = Id: the factor is (R^2 - |y|^2)/2.
    const double r2 = b->sigma * b->sigma * d;
    return {KernelConstruction::EllipticalRadial, law, sigma, [r2, d](const Vec& y) {
              const double q = y.squaredNorm();
              if (q > r2) throw UnavailableError("elliptical kernel evaluated outside the ball");
              return KernelValue::scalar(0.5 * (r2 - q), d);
            }};
  }
  Generator g;
  Mat dispersion;
  if (const auto* e = std::get_if<family::EllipticalScaled>(&law->family())) {
    g = e->generator;
    dispersion = e->dispersion;
  } else if (const auto* s = std::get_if<family::StudentT>(&law->family())) {
    g = Generator::student(s->k, d);
    dispersion = s->dispersion * Mat::Identity(d, d);
  } else if (const auto* n = std::get_if<family::GaussianIso>(&law->family())) {
    g = Generator::gaussian(d);
    dispersion = n->sigma2 * Mat::Identity(d, d);
  } else {
    throw ParameterError("elliptical kernel needs an elliptical law");
  }
  Eigen::LLT<Mat> llt(dispersion);
  if (llt.info() != Eigen::Success) throw ParameterError("dispersion must be positive definite");
  const Mat L = llt.matrixL();
  const bool isotropic = dispersion.isDiagonal() &&
                         (dispersion.diagonal().array() == dispersion(0, 0)).all();
  auto evaluate = [g, L, dispersion, isotropic, method, d](const Vec& y) {
    const Vec z = L.triangularView<Eigen::Lower>().solve(y);
    const double factor = elliptical_factor(g, 0.5 * z.squaredNorm(), method);
    if (isotropic) return KernelValue::scalar(factor * dispersion(0, 0), d);
    if (dispersion.isDiagonal()) return KernelValue::diagonal(factor * dispersion.diagonal());
    return KernelValue::full(factor * dispersion);
  };
  return {KernelConstruction::EllipticalRadial, std::move(law), sigma, std::move(evaluate)};
}

SteinKernel student_kernel(LawPtr law) {
  const auto* s = std::get_if<family::StudentT>(&law->family());
  if (s == nullptr) throw ParameterError("student_kernel needs a Student-t law");
  const int d = law->dim();
  const double k = s->k;
  const double ks2 = k * s->dispersion;
  const double denom = d + k - 2.0;
  return {KernelConstruction::StudentClosedForm, law, law->covariance(),
          [ks2, denom, d](const Vec& y) { return KernelValue::scalar((y.squaredNorm() + ks2) / denom, d); }};
}

SteinKernel product_kernel(LawPtr law, TailMethod method) {
  const auto* p = std::get_if<family::ProductIID>(&law->family());
  if (p == nullptr) throw ParameterError("product_kernel needs a product law");
  std::vector<Law1D> coords = p->coords;
  return {KernelConstruction::ProductDiagonal, law, law->covariance(), [coords, method](const Vec& y) {
            Vec diag(y.size());
            for (Eigen::Index i = 0; i < y.size(); ++i)
              diag(i) = method == TailMethod::Closed ? coords[i].stein_kernel(y(i))
                                                     : coords[i].stein_kernel_quadrature(y(i));
            return KernelValue::diagonal(std::move(diag));
          }};
}

namespace {

SteinKernel linear_kernel(const SteinKernel& base, const Mat& A, bool pointwise) {
  LawPtr law = linear_transform(A, base.law());
  const Mat mean = A * base.mean() * A.transpose();
  SteinKernel::Evaluate evaluate;
  if (pointwise && base.pointwise()) {
    const Eigen::PartialPivLU<Mat> lu(A);
    evaluate = [base, A, lu](const Vec& y) { return base.evaluate(lu.solve(y)).congruence(A); };
  }
  SteinKernel::JointDraw joint = [base, A](Rng& rng, Vec& y, KernelValue& t) {
    Vec u;
    KernelValue tu;
    base.draw(rng, u, tu);
    y = A * u;
    t = tu.congruence(A);
  };
  return {KernelConstruction::Transformed, std::move(law), mean, std::move(evaluate), std::move(joint)};
}

}  // namespace

SteinKernel transform_kernel(const SteinKernel& base, const Mat& A) {
  if (A.rows() != A.cols() || A.rows() != base.dim()) throw ParameterError("transform must be square of the kernel dimension");
  if (Eigen::FullPivLU<Mat>(A).rank() < A.rows()) throw ParameterError("transform matrix is singular");
  return linear_kernel(base, A, true);
}

SteinKernel sum_kernel(const std::vector<SteinKernel>& kernels, const std::vector<double>& scales) {
  if (kernels.empty() || kernels.size() != scales.size()) throw ParameterError("sum kernel needs one scale per kernel");
  std::vector<LawPtr> laws;
  Mat mean = Mat::Zero(kernels.front().dim(), kernels.front().dim());
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    if (kernels[j].dim() != kernels.front().dim()) throw ParameterError("summands must share the dimension");
    laws.push_back(kernels[j].law());
    mean += scales[j] * scales[j] * kernels[j].mean();
  }
  auto joint = [kernels, scales](Rng& rng, Vec& y, KernelValue& t) {
    const int d = kernels.front().dim();
    y = Vec::Zero(d);
    t = KernelValue();
    Vec part;
    KernelValue tp;
    for (std::size_t j = 0; j < kernels.size(); ++j) {
      kernels[j].draw(rng, part, tp);
      y += scales[j] * part;
      tp *= scales[j] * scales[j];
      t += tp;
    }
  };
  return {KernelConstruction::Sum, independent_sum(std::move(laws), scales), mean, {}, std::move(joint)};
}

SteinKernel average_kernel(const std::vector<SteinKernel>& kernels) {
  if (kernels.empty()) throw ParameterError("average kernel needs at least one component");
  for (const auto& k : kernels) {
    if (k.dim() != kernels.front().dim() || !k.mean().isApprox(kernels.front().mean(), 1e-12))
      throw ParameterError("average kernel components must share the covariance");
  }
  if (kernels.size() == 1) return kernels.front();
  const double scale = 1.0 / std::sqrt(static_cast<double>(kernels.size()));
  SteinKernel s = sum_kernel(kernels, std::vector<double>(kernels.size(), scale));
  SteinKernel::JointDraw joint = [s](Rng& rng, Vec& y, KernelValue& t) { s.draw(rng, y, t); };
  return {KernelConstruction::Average, s.law(), s.mean(), {}, std::move(joint)};
}

SteinKernel average_kernel(const SteinKernel& kernel, int copies) {
  if (copies < 1) throw ParameterError("average kernel needs at least one copy");
  return average_kernel(std::vector<SteinKernel>(static_cast<std::size_t>(copies), kernel));
}

SteinKernel mixture_kernel(const std::vector<SteinKernel>& kernels, const std::vector<double>& weights) {
  std::vector<LawPtr> laws;
  for (const auto& k : kernels) laws.push_back(k.law());
  LawPtr law = mixture(std::move(laws), weights);  // validates weights and dimensions
  if (kernels.size() == 1) return kernels.front();
  Mat mean = Mat::Zero(law->dim(), law->dim());
  for (std::size_t s = 0; s < kernels.size(); ++s) mean += weights[s] * kernels[s].mean();
  auto joint = [kernels, weights](Rng& rng, Vec& y, KernelValue& t) {
    double u = rng.uniform();
    std::size_t s = 0;
    while (s + 1 < weights.size() && u >= weights[s]) u -= weights[s++];
    kernels[s].draw(rng, y, t);
  };
  return {KernelConstruction::Mixture, std::move(law), mean, {}, std::move(joint)};
}

SteinKernel default_kernel(const LawPtr& law) {
  const int d = law->dim();
  return std::visit(
      detail::overloaded{
          [&](const family::GaussianIso&) { return constant_kernel(law); },
          [&](const family::StudentT&) { return student_kernel(law); },
          [&](const family::BallUniform&) { return elliptical_kernel(law, TailMethod::Closed); },
          [&](const family::EllipticalScaled&) { return elliptical_kernel(law, TailMethod::Closed); },
          [&](const family::ProductIID&) { return product_kernel(law); },
          [&](const family::Mixture& f) {
            std::vector<SteinKernel> parts;
            for (const auto& c : f.components) parts.push_back(default_kernel(c));
            return mixture_kernel(parts, f.weights);
          },
          [&](const family::CorruptedAdditive& f) {
            return sum_kernel({constant_kernel(gaussian_iso(d, f.sigma2)), default_kernel(f.outlier)},
                              {std::sqrt(1.0 - f.eps), std::sqrt(f.eps)});
          },
          [&](const family::CorruptedMixing& f) {
            return mixture_kernel({constant_kernel(gaussian_iso(d, f.sigma2)), default_kernel(f.outlier)},
                                  {1.0 - f.eps, f.eps});
          },
          [&](const family::LinearTransform& f) {
            const bool square = f.A.rows() == f.A.cols() && Eigen::FullPivLU<Mat>(f.A).rank() == f.A.rows();
            return linear_kernel(default_kernel(f.base), f.A, square);
          },
          [&](const family::IndependentSum& f) {
            std::vector<SteinKernel> parts;
            for (const auto& c : f.parts) parts.push_back(default_kernel(c));
            return sum_kernel(parts, f.scales);
          },
          [&](const auto&) -> SteinKernel {
            throw UnavailableError("no Stein kernel available for law " + law->name());
          },
      },
      law->family());
}

// ---------------------------------------------------------------------------
// Monte Carlo diagnostics
// ---------------------------------------------------------------------------

DiscrepancyStats discrepancy_stats(const SteinKernel& kernel, std::size_t n, std::uint64_t seed) {
  return discrepancy_stats(kernel, kernel.mean(), n, seed);
}

DiscrepancyStats discrepancy_stats(const SteinKernel& kernel, const Mat& reference, std::size_t n,
                                   std::uint64_t seed) {
  if (n < 2) throw ParameterError("discrepancy statistics need n >= 2");
  const int d = kernel.dim();
  if (reference.rows() != d || reference.cols() != d) throw ParameterError("reference matrix has the wrong size");
  const Vec ref_diag = reference.diagonal();
  const double ref_off = reference.squaredNorm() - ref_diag.squaredNorm();
  const auto result = run_replicates(n, seed, 3, [&](Rng& rng, std::size_t, std::span<double> out) {
    Vec y;
    KernelValue t;
    kernel.draw(rng, y, t);
    const double tr = t.trace();
    out[0] = tr;
    out[1] = tr * tr;
    switch (t.shape()) {
      case KernelValue::Shape::Full: out[2] = t.frobenius_distance2(reference); break;
      case KernelValue::Shape::Scalar: out[2] = (ref_diag.array() - tr / d).square().sum() + ref_off; break;
      case KernelValue::Shape::Diagonal: out[2] = (t.to_matrix().diagonal() - ref_diag).squaredNorm() + ref_off; break;
    }
    return true;
  });
  const auto& s = result.stats;
  DiscrepancyStats stats;
  stats.n = s.count();
  stats.e_trace_T = s.mean(0);
  stats.e_trace_T_stderr = s.stderr_of_mean(0);
  stats.var_trace_T = s.variance(0);
  Vec grad(3);
  grad << -2.0 * s.mean(0), 1.0, 0.0;
  stats.var_trace_T_stderr = s.stderr_of_linear(grad);
  stats.e_frob_T_minus_Sigma_sq = s.mean(2);
  stats.e_frob_T_minus_Sigma_sq_stderr = s.stderr_of_mean(2);
  return stats;
}

RiskReport stein_identity_residual(const NoiseModel& model, const SteinKernel& kernel, const VectorField& f,
                                   std::size_t n, std::uint64_t seed) {
  if (kernel.dim() != model.dim()) throw ParameterError("kernel and model dimensions differ");
  if (f.singular_at_origin) {
    const auto report = validity_check(model, ValidityNeed::Kernel);
    if (!report.ok) {
      std::string why;
      for (const auto& r : report.reasons) why += (why.empty() ? "" : "; ") + r;
      throw ValidityError("invalid-by-validity-check: " + why);
    }
  }
  const Vec& theta = model.theta();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    Vec y;
    KernelValue t;
    kernel.draw(rng, y, t);
    const Vec x = theta + y;
    if (f.singular_at_origin && x.squaredNorm() <= kSingularNorm2) return false;
    out[0] = y.dot(f.value(x)) - t.contract(f, x);
    return true;
  });
  return result.stats.report(0, seed, "stein-identity:" + to_string(kernel.construction()) + ":" + f.name);
}

}  // namespace steinshrink
