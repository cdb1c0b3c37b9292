#include "steinshrink/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace steinshrink {

MomentAccumulator::MomentAccumulator(std::size_t width, bool cross_moments)
    : cross_(cross_moments),
      mean_(Vec::Zero(static_cast<Eigen::Index>(width))),
      comoment_(Mat::Zero(static_cast<Eigen::Index>(width), cross_moments ? static_cast<Eigen::Index>(width) : 1)) {
  if (width == 0) throw ParameterError("accumulator width must be positive");
}

void MomentAccumulator::add(std::span<const double> values) {
  const auto w = mean_.size();
  Eigen::Map<const Vec> x(values.data(), w);
  ++n_;
  const Vec delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  if (cross_) {
    comoment_.noalias() += delta * (x - mean_).transpose();
  } else {
    comoment_.col(0) += delta.cwiseProduct(x - mean_);
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double total = na + nb;
  const Vec delta = other.mean_ - mean_;
  mean_ += delta * (nb / total);
  if (cross_ != other.cross_) throw ParameterError("cannot merge accumulators of different kinds");
  if (cross_) {
    comoment_ += other.comoment_ + delta * delta.transpose() * (na * nb / total);
  } else {
    comoment_.col(0) += other.comoment_.col(0) + delta.cwiseAbs2() * (na * nb / total);
  }
  n_ += other.n_;
}

double MomentAccumulator::covariance(std::size_t a, std::size_t b) const {
  if (!cross_ && a != b) throw UnavailableError("cross moments were not tracked");
  if (n_ < 2) return 0.0;
  const auto ia = static_cast<Eigen::Index>(a);
  const auto ib = static_cast<Eigen::Index>(b);
  return (cross_ ? comoment_(ia, ib) : comoment_(ia, 0)) / static_cast<double>(n_ - 1);
}

double MomentAccumulator::stderr_of_mean(std::size_t k) const {
  if (n_ < 2) return 0.0;
  return std::sqrt(std::max(variance(k), 0.0) / static_cast<double>(n_));
}

double MomentAccumulator::stderr_of_linear(const Vec& grad) const {
  if (!cross_) throw UnavailableError("cross moments were not tracked");
  if (n_ < 2) return 0.0;
  const double v = grad.dot(comoment_ * grad) / static_cast<double>(n_ - 1);
  return std::sqrt(std::max(v, 0.0) / static_cast<double>(n_));
}

RiskReport MomentAccumulator::report(std::size_t k, std::uint64_t seed, std::string label) const {
  return {mean(k), stderr_of_mean(k), n_, seed, std::move(label)};
}

namespace {
std::atomic<unsigned> g_workers{std::max(1u, std::thread::hardware_concurrency())};
}

void set_worker_count(unsigned workers) { g_workers = std::max(1u, workers); }
unsigned worker_count() { return g_workers; }

MonteCarloResult run_replicates(std::size_t n, std::uint64_t seed, std::size_t width, const ReplicateFn& fn,
                                double max_singular_fraction, bool cross_moments) {
  if (n < 1) throw ParameterError("replicate count must be at least 1");
  const std::size_t shards = (n + kShardSize - 1) / kShardSize;
  std::vector<MomentAccumulator> shard_stats(shards, MomentAccumulator(width, cross_moments));
  std::vector<std::size_t> shard_singular(shards, 0);

  auto run_shard = [&](std::size_t s) {
    std::vector<double> out(width);
    const std::size_t begin = s * kShardSize;
    const std::size_t end = std::min(n, begin + kShardSize);
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng(derive_seed(seed, r));
      if (fn(rng, r, out)) {
        shard_stats[s].add(out);
      } else {
        ++shard_singular[s];
      }
    }
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), shards));
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < shards; s = next++) {
          try {
            run_shard(s);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = shards;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  MonteCarloResult result{MomentAccumulator(width, cross_moments), 0};
  for (std::size_t s = 0; s < shards; ++s) {
    result.stats.merge(shard_stats[s]);
    result.singular += shard_singular[s];
  }
  if (static_cast<double>(result.singular) > max_singular_fraction * static_cast<double>(n)) {
    throw NumericalGuardError("singular draws: " + std::to_string(result.singular) + " of " + std::to_string(n) +
                              " replicates hit ||x||^2 <= 1e-12 (limit " +
                              std::to_string(max_singular_fraction * 100.0) + "%)");
  }
  return result;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {
double ks_p_value(double statistic, double effective_n) {
  const double sn = std::sqrt(effective_n);
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * statistic);
}
}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("KS test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw ParameterError("KS test needs a nonempty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

}  // namespace steinshrink
