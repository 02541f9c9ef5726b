#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "smalldev/distributions.hpp"
#include "smalldev/errors.hpp"
#include "smalldev/rng.hpp"
#include "smalldev/weights.hpp"

namespace smalldev::mc {

// M_n = max_{k<=n} |S_k| for one simulated path, single pass, O(1) memory.
// Replication r of an experiment always uses Stream(seed, r), so results do
// not depend on how replications are scheduled.  Rademacher walks consume a
// 64-bit word per 64 steps (each bit is a fair +-1); the bit order is fixed,
// so extending a path keeps its prefix.
inline double walk_max_abs(const DistributionSpec& dist, long long n,
                           rng::Stream& stream) {
  if (n < 1) throw std::invalid_argument("walk_max_abs: n must be >= 1");
  dist.require_samplable();
  switch (dist.kind()) {
    case DistributionSpec::Kind::kRademacher: {
      long long s = 0;
      long long m = 0;
      long long done = 0;
      while (done < n) {
        std::uint64_t w = stream.next_u64();
        const int take = static_cast<int>(std::min<long long>(64, n - done));
        for (int i = 0; i < take; ++i) {
          s += (w & 1u) ? 1 : -1;
          w >>= 1;
          const long long abs_s = s < 0 ? -s : s;
          if (abs_s > m) m = abs_s;
        }
        done += take;
      }
      return static_cast<double>(m);
    }
    case DistributionSpec::Kind::kStdNormal: {
      double s = 0.0;
      double m = 0.0;
      for (long long i = 0; i < n; ++i) {
        s += stream.gaussian();
        const double a = std::fabs(s);
        if (a > m) m = a;
      }
      return m;
    }
    default: {
      double s = 0.0;
      double m = 0.0;
      for (long long i = 0; i < n; ++i) {
        s += dist.sample(stream);
        const double a = std::fabs(s);
        if (a > m) m = a;
      }
      return m;
    }
  }
}

struct McEstimate {
  double p_hat = 0.0;
  double stderr_value = 0.0;  // sqrt(p_hat (1 - p_hat) / reps)
  long long reps = 0;
  std::uint64_t seed = 0;
  long long n = 0;
  double eps = 0.0;
  std::string dist;
  double threshold = 0.0;  // sigma * phi(n) * (eps + a_n)
};

namespace detail {

// Partition [0, reps) into contiguous chunks, run `body(lo, hi)` on each and
// sum the returned counts.  Counts are integers and streams are keyed by
// replication index, so any thread count gives the same total.
template <typename Body>
long long parallel_count(long long reps, int threads, Body body) {
  threads = std::max(1, threads);
  if (threads == 1 || reps < 2 * threads) return body(0, reps);
  std::vector<long long> counts(static_cast<std::size_t>(threads), 0);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const long long chunk = (reps + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long long lo = static_cast<long long>(t) * chunk;
    const long long hi = std::min(reps, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&counts, t, lo, hi, &body] {
      counts[static_cast<std::size_t>(t)] = body(lo, hi);
    });
  }
  for (auto& th : pool) th.join();
  long long total = 0;
  for (const long long c : counts) total += c;
  return total;
}

}  // namespace detail

// Fraction of replications with M_n <= sigma phi(n) (eps + a_n(eps)).
// Deterministic for fixed (seed, reps, n, dist) whatever `threads` is.
inline McEstimate estimate_small_dev(const DistributionSpec& dist, long long n,
                                     double eps,
                                     const weights::EpsilonSchedule& schedule,
                                     long long reps, std::uint64_t seed,
                                     int threads = 1) {
  if (reps < 100) throw std::invalid_argument("estimate_small_dev: reps must be >= 100");
  if (n < 2) throw std::invalid_argument("estimate_small_dev: n must be >= 2");
  if (!(eps >= 0.0)) throw std::invalid_argument("estimate_small_dev: eps must be >= 0");
  dist.require_samplable();
  const double threshold =
      dist.sigma() * weights::phi(n) * (eps + schedule.offset(static_cast<double>(n)));
  const long long hits = detail::parallel_count(reps, threads, [&](long long lo, long long hi) {
    long long count = 0;
    for (long long r = lo; r < hi; ++r) {
      rng::Stream stream(seed, static_cast<std::uint64_t>(r));
      if (walk_max_abs(dist, n, stream) <= threshold) ++count;
    }
    return count;
  });
  McEstimate est;
  est.p_hat = static_cast<double>(hits) / static_cast<double>(reps);
  est.stderr_value = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(reps));
  est.reps = reps;
  est.seed = seed;
  est.n = n;
  est.eps = eps;
  est.dist = dist.name();
  est.threshold = threshold;
  return est;
}

struct RateRegression {
  std::vector<long long> n_grid;
  std::vector<double> p_hats;
  double slope = 0.0;
  double intercept = 0.0;
  double expected_slope = 0.0;  // -1/eps^2
};

// Least-squares fit of log p_hat against log log n across the grid.  The
// small-deviation rate makes the population slope -1/eps^2.  Points with
// fewer than 10 successes are rejected outright rather than down-weighted.
inline RateRegression rate_regression(const DistributionSpec& dist, double eps,
                                      std::span<const long long> n_grid,
                                      long long reps, std::uint64_t seed,
                                      int threads = 1) {
  if (n_grid.size() < 4) {
    throw std::invalid_argument("rate_regression: n_grid needs at least 4 points");
  }
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (!(n_grid[i] > n_grid[i - 1])) {
      throw std::invalid_argument("rate_regression: n_grid must be strictly increasing");
    }
  }
  if (!(eps > 0.0)) throw std::invalid_argument("rate_regression: eps must be > 0");

  RateRegression out;
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  out.expected_slope = -1.0 / (eps * eps);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const long long n : n_grid) {
    const auto est = estimate_small_dev(dist, n, eps, weights::EpsilonSchedule::zero(),
                                        reps, seed, threads);
    if (est.p_hat * static_cast<double>(reps) < 10.0) {
      throw InsufficientDataError(
          "rate_regression: p_hat too small for a stable log at n = " + std::to_string(n));
    }
    out.p_hats.push_back(est.p_hat);
    xs.push_back(weights::guarded_loglog(static_cast<double>(n)));
    ys.push_back(std::log(est.p_hat));
  }
  const auto m = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / m;
  return out;
}

struct TruncationStats {
  long long n = 0;
  double p_exponent = 0.0;
  double threshold = 0.0;           // sqrt(n) / (log n)^p
  double b_n = 0.0;                 // n * Var(X*), computed analytically
  double b_n_over_nsigma2 = 0.0;
  double b_n_empirical = 0.0;       // same quantity from the simulated steps
  std::vector<std::pair<double, double>> delta_quantiles;  // (q, Delta_n)
  long long reps = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kDeltaQuantiles[] = {0.0, 0.5, 0.9, 0.99, 1.0};

// Truncation diagnostics: X' = X 1{|X| <= sqrt(n)/(log n)^p}, X* recentered,
// B_n = n Var(X*) from the exact truncated moments, and the coupling gap
// Delta_n = max_{k<=n} |S*_k - S_k| simulated over `reps` replications.
inline TruncationStats truncation_stats(const DistributionSpec& dist, long long n,
                                        double p_exponent, long long reps,
                                        std::uint64_t seed, int threads = 1) {
  if (!(p_exponent > 0.0 && p_exponent < 0.5)) {
    throw std::domain_error("truncation_stats: p_exponent must be in (0, 1/2)");
  }
  if (n < 1) throw std::invalid_argument("truncation_stats: n must be >= 1");
  if (reps < 1) throw std::invalid_argument("truncation_stats: reps must be >= 1");
  dist.require_samplable();

  TruncationStats out;
  out.n = n;
  out.p_exponent = p_exponent;
  out.threshold = std::sqrt(static_cast<double>(n)) /
                  std::pow(weights::guarded_log(static_cast<double>(n)), p_exponent);
  const double var_star = dist.truncated_variance(out.threshold);
  out.b_n = static_cast<double>(n) * var_star;
  out.b_n_over_nsigma2 = var_star / dist.sigma2();
  out.reps = reps;
  out.seed = seed;

  const double mean_trunc = dist.truncated_mean(out.threshold);
  std::vector<double> deltas(static_cast<std::size_t>(reps), 0.0);
  std::vector<double> sum1(static_cast<std::size_t>(reps), 0.0);
  std::vector<double> sum2(static_cast<std::size_t>(reps), 0.0);
  detail::parallel_count(reps, threads, [&](long long lo, long long hi) {
    for (long long r = lo; r < hi; ++r) {
      rng::Stream stream(seed, static_cast<std::uint64_t>(r));
      double gap = 0.0;       // S*_k - S_k
      double max_gap = 0.0;
      double s1 = 0.0;
      double s2 = 0.0;
      for (long long i = 0; i < n; ++i) {
        const double x = dist.sample(stream);
        const double kept = std::fabs(x) <= out.threshold ? x : 0.0;
        gap += (kept - x) - mean_trunc;
        const double a = std::fabs(gap);
        if (a > max_gap) max_gap = a;
        s1 += kept;
        s2 += kept * kept;
      }
      deltas[static_cast<std::size_t>(r)] = max_gap;
      sum1[static_cast<std::size_t>(r)] = s1;
      sum2[static_cast<std::size_t>(r)] = s2;
    }
    return 0LL;
  });

  double total1 = 0.0;
  double total2 = 0.0;
  for (long long r = 0; r < reps; ++r) {
    total1 += sum1[static_cast<std::size_t>(r)];
    total2 += sum2[static_cast<std::size_t>(r)];
  }
  const auto steps = static_cast<double>(n) * static_cast<double>(reps);
  const double m1 = total1 / steps;
  const double m2 = total2 / steps;
  out.b_n_empirical = static_cast<double>(n) * (m2 - m1 * m1);

  std::sort(deltas.begin(), deltas.end());
  for (const double q : kDeltaQuantiles) {
    const auto idx = static_cast<std::size_t>(
        std::llround(q * static_cast<double>(reps - 1)));
    out.delta_quantiles.emplace_back(q, deltas[idx]);
  }
  return out;
}

// (log t, log log t * E[X^2 1{|X| >= t}]) along a grid of thresholds given
// as L = ln t, exact per variant.  Values tending to 0 certify the
// o(1/loglog) moment condition; the doubly-exponential atoms hold near c.
inline std::vector<std::pair<double, double>> condition_profile(
    const DistributionSpec& dist, std::span<const double> log_t_grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(log_t_grid.size());
  for (const double log_t : log_t_grid) {
    if (!(log_t >= 0.0) || !std::isfinite(log_t)) {
      throw std::invalid_argument("condition_profile: requires t >= 1 (pass ln t >= 0)");
    }
    const double value =
        weights::guarded_loglog_from_log(log_t) * dist.tail_second_moment_log(log_t);
    out.emplace_back(log_t, value);
  }
  return out;
}

}  // namespace smalldev::mc
