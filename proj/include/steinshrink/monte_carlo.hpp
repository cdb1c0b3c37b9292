#pragma once

#include "steinshrink/core.hpp"
#include "steinshrink/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace steinshrink {

/// Monte Carlo estimate of an expectation.
struct RiskReport {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string label;
};

/// Streaming means and co-moments of a fixed-width vector of statistics
/// (Welford / Chan et al. pairwise update).
class MomentAccumulator {
 public:
  /// With cross_moments false only variances are tracked, which keeps wide
  /// statistic vectors (one entry per grid point) linear in the width.
  explicit MomentAccumulator(std::size_t width = 1, bool cross_moments = true);

  void add(std::span<const double> values);
  void add(double value) { add(std::span<const double>(&value, 1)); }
  void merge(const MomentAccumulator& other);

  std::size_t width() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t count() const { return n_; }
  double mean(std::size_t k = 0) const { return mean_(static_cast<Eigen::Index>(k)); }
  bool cross_moments() const { return cross_; }
  /// Unbiased sample covariance between statistics a and b.
  double covariance(std::size_t a, std::size_t b) const;
  double variance(std::size_t k = 0) const { return covariance(k, k); }
  /// Standard error of mean(k).
  double stderr_of_mean(std::size_t k = 0) const;
  /// Standard error of a smooth function of the means with gradient `grad`.
  double stderr_of_linear(const Vec& grad) const;

  RiskReport report(std::size_t k, std::uint64_t seed, std::string label) const;

 private:
  std::size_t n_ = 0;
  bool cross_ = true;
  Vec mean_;
  Mat comoment_;  // width x width, or width x 1 (diagonal) without cross moments
};

/// One replicate: fill `out` with the statistics for replicate `index`, using
/// `rng` (seeded from the run seed and the index). Return false to report a
/// singular draw, which is skipped and counted.
using ReplicateFn = std::function<bool(Rng& rng, std::size_t index, std::span<double> out)>;

struct MonteCarloResult {
  MomentAccumulator stats;
  std::size_t singular = 0;
};

/// Replicates per shard. Shards are accumulated independently and merged in
/// index order, so results do not depend on the worker count.
inline constexpr std::size_t kShardSize = 4096;

/// Number of worker threads used by run_replicates (default: hardware
/// concurrency, at least 1).
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Run n replicates. Throws NumericalGuardError when the fraction of singular
/// replicates exceeds `max_singular_fraction`.
MonteCarloResult run_replicates(std::size_t n, std::uint64_t seed, std::size_t width, const ReplicateFn& fn,
                                double max_singular_fraction = 1e-4, bool cross_moments = true);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
/// One-sample test against a continuous CDF.
KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);
/// Kolmogorov distribution survival function P(K > x).
double kolmogorov_survival(double x);

}  // namespace steinshrink
