#include "steinshrink/zero_bias.hpp"

#include "steinshrink/quadrature.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace steinshrink {

// ---------------------------------------------------------------------------
// Univariate densities
// ---------------------------------------------------------------------------

std::function<double(double)> zb1d(std::function<double(double)> density, double sigma2, double lower,
                                   double upper) {
  if (!(sigma2 > 0.0)) throw ParameterError("zero-bias density needs a positive variance");
  const double mass = quad::integrate(density, lower, upper);
  const double mean = quad::integrate([&](double u) { return u * density(u); }, lower, upper);
  const double second = quad::integrate([&](double u) { return u * u * density(u); }, lower, upper);
  if (!std::isfinite(mass) || !std::isfinite(second) || std::abs(mass - 1.0) > 1e-6)
    throw ParameterError("zero-bias input is not an integrable probability density");
  if (std::abs(mean) > 1e-6 * std::sqrt(sigma2)) throw ParameterError("zero-bias input must have mean zero");
  if (std::abs(second - sigma2) > 1e-6 * sigma2) throw ParameterError("zero-bias input variance differs from sigma2");
  return [density = std::move(density), sigma2, lower, upper](double y) {
    if (y <= lower || y >= upper) return 0.0;
    // For y < 0 use the lower tail (the two agree because the mean is zero);
    // each side then integrates a single-signed function.
    if (y < 0.0) return -quad::integrate([&](double u) { return u * density(u); }, lower, y) / sigma2;
    return quad::integrate([&](double u) { return u * density(u); }, y, upper) / sigma2;
  };
}

std::function<double(double)> zb1d_discrete(std::vector<double> points, std::vector<double> probs) {
  if (points.empty() || points.size() != probs.size()) throw ParameterError("one probability per point required");
  double total = 0.0, mean = 0.0, second = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (probs[k] < 0.0) throw ParameterError("probabilities must be nonnegative");
    total += probs[k];
    mean += probs[k] * points[k];
    second += probs[k] * points[k] * points[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("probabilities must sum to 1");
  if (std::abs(mean) > 1e-12) throw ParameterError("discrete law must have mean zero");
  if (!(second > 0.0)) throw ParameterError("discrete law must have positive variance");
  return [points = std::move(points), probs = std::move(probs), second](double y) {
    double tail = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k)
      if (points[k] > y) tail += points[k] * probs[k];
    return std::max(tail, 0.0) / second;
  };
}

// ---------------------------------------------------------------------------
// Coupling plumbing
// ---------------------------------------------------------------------------

std::string to_string(CouplingConstruction c) {
  switch (c) {
    case CouplingConstruction::IndependentReplace: return "independent-replace";
    case CouplingConstruction::SquareBiasScale: return "square-bias";
    case CouplingConstruction::SphereBall: return "sphere-ball";
    case CouplingConstruction::StudentGamma: return "student-gamma";
    case CouplingConstruction::Sum: return "sum";
    case CouplingConstruction::Mixture: return "mixture";
    case CouplingConstruction::LinearMap: return "linear-map";
  }
  return "unknown";
}

Vec ZeroBiasDraw::vector(std::size_t p, int i) const {
  switch (kind) {
    case Kind::Common: return common;
    case Kind::CoordinateReplace: {
      Vec v = y;
      v(i) = replaced(i);
      return v;
    }
    case Kind::PerPair: return per_pair[p];
  }
  return {};
}

namespace {

constexpr double kZeroCovariance = 1e-12;

bool negligible(double value, double scale) { return std::abs(value) <= kZeroCovariance * scale; }

// Discrete sampler over indices by cumulative weights.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      total += w;
      cumulative_.push_back(total);
    }
    if (!(total > 0.0)) throw ParameterError("categorical weights must have a positive total");
    for (auto& c : cumulative_) c /= total;
  }
  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

// Pair index of (i, i) for each coordinate of a diagonal coupling.
std::vector<int> diagonal_pair_index(const ZeroBiasCoupling& c) {
  std::vector<int> index(static_cast<std::size_t>(c.dim()), -1);
  for (std::size_t p = 0; p < c.pairs().size(); ++p)
    if (c.pairs()[p].first == c.pairs()[p].second) index[static_cast<std::size_t>(c.pairs()[p].first)] = static_cast<int>(p);
  return index;
}

void require_diagonal(const ZeroBiasCoupling& c, const std::string& what) {
  if (!c.diagonal()) throw ParameterError(what + " needs components with diagonal covariance");
}

}  // namespace

ZeroBiasCoupling::ZeroBiasCoupling(CouplingConstruction construction, LawPtr law, Draw draw)
    : construction_(construction), law_(std::move(law)), draw_(std::move(draw)) {
  sigma_ = law_->covariance();
  const double scale = sigma_.cwiseAbs().maxCoeff();
  diagonal_ = true;
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j < dim(); ++j) {
      if (negligible(sigma_(i, j), scale)) continue;
      pairs_.emplace_back(i, j);
      if (i != j) diagonal_ = false;
    }
  }
  if (pairs_.empty()) throw ParameterError("zero-bias vectors need a nonzero covariance");
}

std::vector<double> ZeroBiasCoupling::index_law() const {
  std::vector<double> probs;
  double total = 0.0;
  for (const auto& [i, j] : pairs_) {
    const double s = sigma_(i, j);
    if (s < 0.0)
      throw ParameterError("index law needs nonnegative covariances; sigma_" + std::to_string(i) + std::to_string(j) +
                           " < 0");
    probs.push_back(s);
    total += s;
  }
  for (auto& p : probs) p /= total;
  return probs;
}

// ---------------------------------------------------------------------------
// Couplings
// ---------------------------------------------------------------------------

ZeroBiasCoupling couple_independent(const LawPtr& law) {
  const int d = law->dim();
  std::vector<Law1D> coords;
  if (const auto* p = std::get_if<family::ProductIID>(&law->family())) {
    coords = p->coords;
  } else if (const auto* g = std::get_if<family::GaussianIso>(&law->family())) {
    if (!(g->sigma2 > 0.0)) throw ParameterError("independent coupling needs positive variances");
    coords.assign(static_cast<std::size_t>(d), Law1D::gaussian(g->sigma2));
  } else {
    throw ParameterError("independent coupling needs a law with independent coordinates");
  }
  return {CouplingConstruction::IndependentReplace, law, [coords, d](Rng& rng, ZeroBiasDraw& out) {
            out.kind = ZeroBiasDraw::Kind::CoordinateReplace;
            out.y.resize(d);
            out.replaced.resize(d);
            for (int i = 0; i < d; ++i) out.y(i) = coords[i].sample(rng);
            for (int i = 0; i < d; ++i) out.replaced(i) = coords[i].sample_zero_bias(rng);
          }};
}

ZeroBiasCoupling couple_sphere(const LawPtr& law) {
  const auto* s = std::get_if<family::SphereUniform>(&law->family());
  if (s == nullptr) throw ParameterError("sphere coupling needs a sphere law");
  const int d = law->dim();
  const double radius = s->sigma * std::sqrt(static_cast<double>(d));
  return {CouplingConstruction::SphereBall, law, [radius, d](Rng& rng, ZeroBiasDraw& out) {
            out.kind = ZeroBiasDraw::Kind::Common;
            out.y.resize(d);
            rng.unit_sphere({out.y.data(), static_cast<std::size_t>(d)});
            out.y *= radius;
            // R has density d r^{d-1} on [0, 1].
            const double r = std::pow(rng.uniform(), 1.0 / d);
            out.common = r * out.y;
          }};
}

ZeroBiasCoupling couple_student(const LawPtr& law) {
  const auto* s = std::get_if<family::StudentT>(&law->family());
  if (s == nullptr) throw ParameterError("Student coupling needs a Student-t law");
  const int d = law->dim();
  const double k = s->k;
  const double scale = std::sqrt(s->dispersion);
  return {CouplingConstruction::StudentGamma, law, [k, scale, d](Rng& rng, ZeroBiasDraw& out) {
            out.kind = ZeroBiasDraw::Kind::Common;
            // Gamma additivity: delta + eps ~ Gamma(k/2, k/2), the mixing law of Y.
            const double delta = rng.gamma(0.5 * k - 1.0, 0.5 * k);
            const double eps = rng.gamma(1.0, 0.5 * k);
            out.common.resize(d);
            for (int i = 0; i < d; ++i) out.common(i) = rng.normal();
            out.y = out.common * (scale / std::sqrt(delta + eps));
            out.common *= scale / std::sqrt(delta);
          }};
}

ZeroBiasCoupling zb_sum(const std::vector<ZeroBiasCoupling>& parts, const std::vector<double>& scales) {
  if (parts.empty() || parts.size() != scales.size()) throw ParameterError("sum coupling needs one scale per part");
  const int d = parts.front().dim();
  std::vector<LawPtr> laws;
  std::vector<std::vector<int>> pair_index;
  for (const auto& p : parts) {
    if (p.dim() != d) throw ParameterError("summands must share the dimension");
    require_diagonal(p, "sum coupling");
    laws.push_back(p.law());
    pair_index.push_back(diagonal_pair_index(p));
  }
  if (parts.size() == 1 && scales.front() == 1.0) return parts.front();
  std::vector<Categorical> pick(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    std::vector<double> w;
    for (std::size_t j = 0; j < parts.size(); ++j) w.push_back(scales[j] * scales[j] * parts[j].sigma()(i, i));
    if (!(std::accumulate(w.begin(), w.end(), 0.0) > 0.0))
      throw ParameterError("sum coupling: coordinate " + std::to_string(i) + " has zero total variance");
    pick[static_cast<std::size_t>(i)] = Categorical(w);
  }
  LawPtr law = independent_sum(std::move(laws), scales);
  return {CouplingConstruction::Sum, law, [parts, scales, pick, pair_index, d](Rng& rng, ZeroBiasDraw& out) {
            std::vector<ZeroBiasDraw> draws(parts.size());
            out.kind = ZeroBiasDraw::Kind::PerPair;
            out.y = Vec::Zero(d);
            for (std::size_t j = 0; j < parts.size(); ++j) {
              parts[j].draw(rng, draws[j]);
              out.y += scales[j] * draws[j].y;
            }
            out.per_pair.resize(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) {
              const std::size_t j = pick[static_cast<std::size_t>(i)].sample(rng);
              const int p = pair_index[j][static_cast<std::size_t>(i)];
              out.per_pair[static_cast<std::size_t>(i)] =
                  out.y + scales[j] * (draws[j].vector(static_cast<std::size_t>(p), i) - draws[j].y);
            }
          }};
}

ZeroBiasCoupling zb_mixture(const std::vector<ZeroBiasCoupling>& parts, const std::vector<double>& weights) {
  std::vector<LawPtr> laws;
  for (const auto& p : parts) laws.push_back(p.law());
  LawPtr law = mixture(std::move(laws), weights);
  if (parts.size() == 1) return parts.front();
  const int d = law->dim();
  std::vector<std::vector<int>> pair_index;
  for (const auto& p : parts) {
    require_diagonal(p, "mixture coupling");
    pair_index.push_back(diagonal_pair_index(p));
  }
  // nu^i(s) proportional to mu_s sigma_{s,i}^2; when sigma_{s,i}^2 is constant
  // in s, nu^i = mu and the component draw can be reused as is.
  bool same_as_mu = true;
  std::vector<Categorical> nu(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    std::vector<double> w;
    for (std::size_t s = 0; s < parts.size(); ++s) {
      w.push_back(weights[s] * parts[s].sigma()(i, i));
      if (std::abs(parts[s].sigma()(i, i) - parts[0].sigma()(i, i)) > 1e-12 * std::abs(parts[0].sigma()(i, i)))
        same_as_mu = false;
    }
    nu[static_cast<std::size_t>(i)] = Categorical(w);
  }
  const Categorical mu(weights);
  return {CouplingConstruction::Mixture, law,
          [parts, mu, nu, pair_index, same_as_mu, d](Rng& rng, ZeroBiasDraw& out) {
            const std::size_t s = mu.sample(rng);
            if (same_as_mu) {
              parts[s].draw(rng, out);
              return;
            }
            ZeroBiasDraw own;
            parts[s].draw(rng, own);
            std::map<std::size_t, ZeroBiasDraw> fresh;
            out.kind = ZeroBiasDraw::Kind::PerPair;
            out.y = own.y;
            out.per_pair.resize(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) {
              const std::size_t t = nu[static_cast<std::size_t>(i)].sample(rng);
              const auto p = static_cast<std::size_t>(pair_index[t][static_cast<std::size_t>(i)]);
              if (t == s) {
                out.per_pair[static_cast<std::size_t>(i)] = own.vector(p, i);
              } else {
                auto it = fresh.find(t);
                if (it == fresh.end()) {
                  it = fresh.emplace(t, ZeroBiasDraw{}).first;
                  parts[t].draw(rng, it->second);
                }
                out.per_pair[static_cast<std::size_t>(i)] = it->second.vector(p, i);
              }
            }
          }};
}

ZeroBiasCoupling zb_linear(const Mat& A, const ZeroBiasCoupling& base) {
  if (A.cols() != base.dim()) throw ParameterError("linear map columns must match the base dimension");
  LawPtr law = linear_transform(A, base.law());
  const Mat& gamma = base.sigma();
  const Mat sigma = A * gamma * A.transpose();
  const double scale = sigma.cwiseAbs().maxCoeff();
  const auto& base_pairs = base.pairs();
  std::vector<Categorical> mu;
  for (int i = 0; i < A.rows(); ++i) {
    for (int j = 0; j < A.rows(); ++j) {
      if (negligible(sigma(i, j), scale)) continue;
      std::vector<double> w;
      for (const auto& [k, l] : base_pairs) {
        const double product = A(i, k) * gamma(k, l) * A(j, l);
        const double v = product / sigma(i, j);
        if (product < -1e-15 * scale) {
          std::ostringstream os;
          os << "linear-map zero bias needs a_ik gamma_kl a_jl >= 0; negative at (i,j,k,l)=(" << i << "," << j << ","
             << k << "," << l << ")";
          throw ParameterError(os.str());
        }
        w.push_back(std::max(v, 0.0));
      }
      mu.emplace_back(w);
    }
  }
  return {CouplingConstruction::LinearMap, law, [A, base, mu](Rng& rng, ZeroBiasDraw& out) {
            ZeroBiasDraw b;
            base.draw(rng, b);
            out.y = A * b.y;
            if (b.kind == ZeroBiasDraw::Kind::Common) {
              out.kind = ZeroBiasDraw::Kind::Common;
              out.common = A * b.common;
              return;
            }
            out.kind = ZeroBiasDraw::Kind::PerPair;
            out.per_pair.resize(mu.size());
            std::map<std::size_t, Vec> mapped;
            for (std::size_t p = 0; p < mu.size(); ++p) {
              const std::size_t q = mu[p].sample(rng);
              auto it = mapped.find(q);
              if (it == mapped.end())
                it = mapped.emplace(q, A * b.vector(q, base.pairs()[q].first)).first;
              out.per_pair[p] = it->second;
            }
          }};
}

// ---------------------------------------------------------------------------
// Square-bias construction
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kTableSize = std::size_t{1} << 14;
constexpr int kResamplingPool = 64;

// Inverse CDF of the square-biased univariate law y^2 p(y) / sigma^2,
// tabulated on a uniform grid and inverted by linear interpolation.
class SquareBiasTable {
 public:
  explicit SquareBiasTable(const Law1D& law) {
    const double half = law.effective_half_width();
    lo_ = -half;
    step_ = 2.0 * half / static_cast<double>(kTableSize - 1);
    cdf_.resize(kTableSize);
    double prev = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < kTableSize; ++k) {
      const double x = lo_ + step_ * static_cast<double>(k);
      const double g = x * x * law.density(x);
      if (k > 0) acc += 0.5 * (prev + g) * step_;
      cdf_[k] = acc;
      prev = g;
    }
    for (auto& c : cdf_) c /= acc;
  }

  double sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return lo_;
    if (it == cdf_.end()) return lo_ + step_ * static_cast<double>(kTableSize - 1);
    const auto k = static_cast<std::size_t>(it - cdf_.begin()) - 1;
    const double span = cdf_[k + 1] - cdf_[k];
    const double frac = span > 0.0 ? (u - cdf_[k]) / span : 0.0;
    return lo_ + step_ * (static_cast<double>(k) + frac);
  }

 private:
  double lo_ = 0.0;
  double step_ = 0.0;
  std::vector<double> cdf_;
};

class SquareBiasSampler {
 public:
  enum class Method { Table, Rejection, Resampling };

  explicit SquareBiasSampler(LawPtr law) : law_(std::move(law)) {
    const int d = law_->dim();
    if (!law_->conditional_mean_zero())
      throw ParameterError("square-bias construction needs the conditional mean zero property");
    const Mat sigma = law_->covariance();
    for (int i = 0; i < d; ++i)
      if (!(sigma(i, i) > 0.0)) throw ParameterError("square-bias construction needs positive variances");
    if (const auto* p = std::get_if<family::ProductIID>(&law_->family())) {
      method_ = Method::Table;
      coords_ = p->coords;
      std::map<std::tuple<int, double, double>, std::shared_ptr<const SquareBiasTable>> cache;
      for (const auto& c : coords_) {
        const auto key = std::make_tuple(static_cast<int>(c.kind()), c.variance(), c.smoothing());
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, std::make_shared<SquareBiasTable>(c)).first;
        tables_.push_back(it->second);
      }
      return;
    }
    bool bounded = true;
    for (int i = 0; i < d; ++i) {
      const auto b = law_->coordinate_bound(i);
      if (!b || !(*b > 0.0)) {
        bounded = false;
        break;
      }
      bounds_.push_back(*b);
    }
    method_ = bounded ? Method::Rejection : Method::Resampling;
  }

  Method method() const { return method_; }
  std::string method_name() const {
    switch (method_) {
      case Method::Table: return "tabulated-inverse-cdf";
      case Method::Rejection: return "rejection";
      case Method::Resampling: return "importance-resampling";
    }
    return "unknown";
  }

  /// Y^i = D_{i,U} Ysq^i; `ess` receives the effective sample size of the
  /// resampling pool (left untouched for exact methods).
  Vec sample(Rng& rng, int i, double* ess = nullptr) const {
    const int d = law_->dim();
    Vec y(d);
    switch (method_) {
      case Method::Table:
        for (int j = 0; j < d; ++j) y(j) = j == i ? tables_[j]->sample(rng) : coords_[j].sample(rng);
        break;
      case Method::Rejection: {
        // Accept y with probability y_i^2 / b_i^2: exact draws from the square-biased law.
        const double b2 = bounds_[i] * bounds_[i];
        for (std::size_t attempt = 0;; ++attempt) {
          if (attempt > 10'000'000) throw NumericalGuardError("square-bias rejection sampler did not accept");
          y = law_->sample(rng);
          if (rng.uniform() * b2 < y(i) * y(i)) break;
        }
        break;
      }
      case Method::Resampling: {
        std::vector<Vec> pool(kResamplingPool);
        std::vector<double> w(kResamplingPool);
        double total = 0.0, total2 = 0.0;
        for (int m = 0; m < kResamplingPool; ++m) {
          pool[m] = law_->sample(rng);
          w[m] = pool[m](i) * pool[m](i);
          total += w[m];
          total2 += w[m] * w[m];
        }
        if (!(total > 0.0) || !std::isfinite(total))
          throw NumericalGuardError("square-bias resampling failed: all " + std::to_string(kResamplingPool) +
                                    " pool weights vanish for coordinate " + std::to_string(i));
        if (ess) *ess = total * total / total2;
        double u = rng.uniform() * total;
        int pick = 0;
        while (pick + 1 < kResamplingPool && u >= w[pick]) u -= w[pick++];
        y = pool[pick];
        break;
      }
    }
    y(i) *= rng.uniform();
    return y;
  }

 private:
  LawPtr law_;
  Method method_ = Method::Resampling;
  std::vector<Law1D> coords_;
  std::vector<std::shared_ptr<const SquareBiasTable>> tables_;
  std::vector<double> bounds_;
};

}  // namespace

ZeroBiasCoupling square_bias_coupling(const LawPtr& law) {
  auto sampler = std::make_shared<const SquareBiasSampler>(law);
  const int d = law->dim();
  return {CouplingConstruction::SquareBiasScale, law, [sampler, law, d](Rng& rng, ZeroBiasDraw& out) {
            out.kind = ZeroBiasDraw::Kind::PerPair;
            out.y = law->sample(rng);
            out.per_pair.resize(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) out.per_pair[static_cast<std::size_t>(i)] = sampler->sample(rng, i);
          }};
}

ZbConstructResult zb_construct(const NoiseModel& model, int i, std::size_t n, std::uint64_t seed) {
  if (i < 0 || i >= model.dim()) throw ParameterError("coordinate index out of range");
  if (n < 1) throw ParameterError("sample size must be at least 1");
  const SquareBiasSampler sampler(model.law_ptr());
  ZbConstructResult result;
  result.method = sampler.method_name();
  result.draws.resize(model.dim(), static_cast<Eigen::Index>(n));
  double ess_total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng(derive_seed(seed, r));
    double ess = 0.0;
    result.draws.col(static_cast<Eigen::Index>(r)) = model.theta() + sampler.sample(rng, i, &ess);
    ess_total += ess;
  }
  if (sampler.method() == SquareBiasSampler::Method::Resampling)
    result.mean_effective_sample_size = ess_total / static_cast<double>(n);
  return result;
}

ZeroBiasCoupling default_coupling(const LawPtr& law) {
  const int d = law->dim();
  return std::visit(
      detail::overloaded{
          [&](const family::GaussianIso&) { return couple_independent(law); },
          [&](const family::ProductIID&) { return couple_independent(law); },
          [&](const family::SphereUniform&) { return couple_sphere(law); },
          [&](const family::StudentT&) { return couple_student(law); },
          [&](const family::Mixture& f) {
            std::vector<ZeroBiasCoupling> parts;
            for (const auto& c : f.components) parts.push_back(default_coupling(c));
            return zb_mixture(parts, f.weights);
          },
          [&](const family::CorruptedAdditive& f) {
            return zb_sum({couple_independent(gaussian_iso(d, f.sigma2)), default_coupling(f.outlier)},
                          {std::sqrt(1.0 - f.eps), std::sqrt(f.eps)});
          },
          [&](const family::CorruptedMixing& f) {
            return zb_mixture({couple_independent(gaussian_iso(d, f.sigma2)), default_coupling(f.outlier)},
                              {1.0 - f.eps, f.eps});
          },
          [&](const family::LinearTransform& f) { return zb_linear(f.A, default_coupling(f.base)); },
          [&](const family::IndependentSum& f) {
            std::vector<ZeroBiasCoupling> parts;
            for (const auto& c : f.parts) parts.push_back(default_coupling(c));
            return zb_sum(parts, f.scales);
          },
          [&](const auto&) { return square_bias_coupling(law); },
      },
      law->family());
}

// ---------------------------------------------------------------------------
// Densities and identity checks
// ---------------------------------------------------------------------------

std::function<double(const Vec&)> zb_density(const LawPtr& law, int i) {
  const int d = law->dim();
  if (i < 0 || i >= d) throw ParameterError("coordinate index out of range");
  if (!coordinate_domination(*law))
    throw UnavailableError("density unavailable: |y_i| p(y) is not dominated for law " + law->name());
  if (const auto* p = std::get_if<family::ProductIID>(&law->family())) {
    const auto coords = p->coords;
    return [coords, i](const Vec& y) {
      double value = 1.0;
      for (Eigen::Index j = 0; j < y.size(); ++j)
        value *= j == i ? coords[j].zero_bias_density(y(j)) : coords[j].density(y(j));
      return value;
    };
  }
  if (law->is_gaussian() && law->covariance().isDiagonal()) {
    return [law](const Vec& y) { return std::exp(*law->log_density(y)); };
  }
  if (!law->log_density(Vec::Zero(d))) throw UnavailableError("density unavailable for law " + law->name());
  const double sigma2 = law->covariance()(i, i);
  return [law, i, sigma2](const Vec& y) {
    Vec z = y;
    auto integrand = [&](double u) {
      z(i) = u;
      return u * std::exp(*law->log_density(z));
    };
    const double inf = std::numeric_limits<double>::infinity();
    const double yi = y(i);
    // Integrate on the side where u has one sign (conditional mean zero).
    const double tail = yi >= 0.0 ? quad::integrate(integrand, yi, inf) : -quad::integrate(integrand, -inf, yi);
    return tail / sigma2;
  };
}

bool zb_weighted_partials(const ZeroBiasCoupling& coupling, const ZeroBiasDraw& draw, const Vec& theta,
                          const VectorField& f, double& out) {
  const auto& pairs = coupling.pairs();
  const Mat& sigma = coupling.sigma();
  out = 0.0;
  switch (draw.kind) {
    case ZeroBiasDraw::Kind::Common: {
      const Vec xz = theta + draw.common;
      if (f.singular_at_origin && xz.squaredNorm() <= kSingularNorm2) return false;
      for (const auto& [i, j] : pairs) out += sigma(i, j) * f.partial_at(xz, i, j);
      return true;
    }
    case ZeroBiasDraw::Kind::CoordinateReplace: {
      // Swap one coordinate in place instead of copying per pair.
      Vec xz = theta + draw.y;
      for (const auto& [i, j] : pairs) {
        const double keep = xz(i);
        xz(i) = theta(i) + draw.replaced(i);
        if (f.singular_at_origin && xz.squaredNorm() <= kSingularNorm2) return false;
        out += sigma(i, j) * f.partial_at(xz, i, j);
        xz(i) = keep;
      }
      return true;
    }
    case ZeroBiasDraw::Kind::PerPair:
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        const Vec xz = theta + draw.per_pair[p];
        if (f.singular_at_origin && xz.squaredNorm() <= kSingularNorm2) return false;
        out += sigma(i, j) * f.partial_at(xz, i, j);
      }
      return true;
  }
  return false;
}

RiskReport zb_identity_residual(const NoiseModel& model, const ZeroBiasCoupling& coupling, const VectorField& f,
                                std::size_t n, std::uint64_t seed) {
  if (coupling.dim() != model.dim()) throw ParameterError("coupling and model dimensions differ");
  if (f.singular_at_origin) {
    const auto report = validity_check(model, ValidityNeed::ZeroBias);
    if (!report.ok) {
      std::string why;
      for (const auto& r : report.reasons) why += (why.empty() ? "" : "; ") + r;
      throw ValidityError("invalid-by-validity-check: " + why);
    }
  }
  const Vec& theta = model.theta();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    ZeroBiasDraw draw;
    coupling.draw(rng, draw);
    const Vec x = theta + draw.y;
    if (f.singular_at_origin && x.squaredNorm() <= kSingularNorm2) return false;
    double rhs = 0.0;
    if (!zb_weighted_partials(coupling, draw, theta, f, rhs)) return false;
    out[0] = draw.y.dot(f.value(x)) - rhs;
    return true;
  });
  return result.stats.report(0, seed, "zero-bias-identity:" + to_string(coupling.construction()) + ":" + f.name);
}

RiskReport sum_projection_residual(const ZeroBiasCoupling& coupling, const std::function<double(double)>& h,
                                   const std::function<double(double)>& h_prime, std::size_t n,
                                   std::uint64_t seed) {
  const auto probs = coupling.index_law();
  const Categorical index(probs);
  double total = 0.0;
  for (const auto& [i, j] : coupling.pairs()) total += coupling.sigma()(i, j);
  const auto& pairs = coupling.pairs();
  const auto result = run_replicates(n, seed, 1, [&](Rng& rng, std::size_t, std::span<double> out) {
    ZeroBiasDraw draw;
    coupling.draw(rng, draw);
    const double w = draw.y.sum();
    const std::size_t p = index.sample(rng);
    const double w_star = draw.vector(p, pairs[p].first).sum();
    out[0] = w * h(w) - total * h_prime(w_star);
    return true;
  });
  return result.stats.report(0, seed, "sum-projection:" + to_string(coupling.construction()));
}

}  // namespace steinshrink
