#pragma once

#include <atomic>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "smalldev/analytic.hpp"
#include "smalldev/errors.hpp"

namespace smalldev::weights {

// Guarded logarithms: log x = ln(x v e), log log x = log(log x).  They make
// every weight well defined from n = 1 (log 1 = log log 1 = 1).
inline double guarded_log(double x) {
  return std::log(std::max(x, std::numbers::e));
}

inline double guarded_loglog(double x) { return guarded_log(guarded_log(x)); }

// guarded log log t given L = ln t (atoms and huge thresholds never leave
// the log scale): ln(max(max(L,1), e)) = ln(max(L, e)).
inline double guarded_loglog_from_log(double log_t) {
  return std::log(std::max(log_t, std::numbers::e));
}

// Exponent pair for the (log n)^a (log log n)^b / n weights.
struct WeightParams {
  double a = 0.0;
  double b = 0.0;
};

inline void validate(const WeightParams& p) {
  if (!(p.a > -1.0)) throw std::domain_error("weights: requires a > -1");
  if (!(p.b > -1.0)) throw std::domain_error("weights: requires b > -1");
}

// The series with weight exponent a converges for eps below this and
// diverges at or above it.
inline double critical_epsilon(const WeightParams& p) {
  return 1.0 / std::sqrt(1.0 + p.a);
}

enum class ScheduleForm { kZero, kConstantTauOverLogLog };

// Boundary shift a_n with a_n * log log n -> tau.  The built-in form makes
// the limit exact at every n.
struct EpsilonSchedule {
  ScheduleForm form = ScheduleForm::kZero;
  double tau = 0.0;

  double offset(double n) const {
    return form == ScheduleForm::kZero ? 0.0 : tau / guarded_loglog(n);
  }

  static EpsilonSchedule zero() { return {}; }
  static EpsilonSchedule constant_tau(double tau) {
    return {ScheduleForm::kConstantTauOverLogLog, tau};
  }
};

enum class PsiFamily { kCOverSqrtLogLog, kGeneralTabulated };

// Boundary function psi(n) fed to the integral tests.  Either the parametric
// family c/sqrt(log log n) or a tabulated step function (value carried
// forward between knots).
struct PsiSpec {
  PsiFamily family = PsiFamily::kCOverSqrtLogLog;
  double c = 1.0;
  std::vector<std::pair<double, double>> table;  // (n, psi(n)), ascending n

  static PsiSpec c_over_sqrt_loglog(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("PsiSpec: c must be > 0");
    PsiSpec s;
    s.family = PsiFamily::kCOverSqrtLogLog;
    s.c = c;
    return s;
  }

  static PsiSpec tabulated(std::vector<std::pair<double, double>> table) {
    if (table.empty()) throw std::invalid_argument("PsiSpec: empty table");
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (!(table[i].first > table[i - 1].first)) {
        throw std::invalid_argument("PsiSpec: table n values must be ascending");
      }
    }
    PsiSpec s;
    s.family = PsiFamily::kGeneralTabulated;
    s.table = std::move(table);
    return s;
  }

  double eval(double n) const {
    if (family == PsiFamily::kCOverSqrtLogLog) {
      return c / std::sqrt(guarded_loglog(n));
    }
    double value = table.front().second;
    for (const auto& [knot, psi] : table) {
      if (knot > n) break;
      value = psi;
    }
    return value;
  }
};

struct KernelSumResult {
  double partial_sum = 0.0;
  long long n_max = 0;
  double tail_bound = 0.0;   // 0 when no closed-form tail applies
  double scaled_value = 0.0;
};

// Cooperative cancellation for long partial sums; checked at least every
// 10^5 terms.
class CancelToken {
 public:
  void request_stop() { flag_.store(true, std::memory_order_relaxed); }
  bool stop_requested() const { return flag_.load(std::memory_order_relaxed); }

 private:
  std::atomic<bool> flag_{false};
};

namespace detail {

inline constexpr long long kCancelStride = 1 << 16;

inline void check_cancel(const CancelToken* token, long long n) {
  if (token && (n & (kCancelStride - 1)) == 0 && token->stop_requested()) {
    throw CancelledError("partial sum cancelled at n = " + std::to_string(n));
  }
}

// log n, log log n and ln(log log n) with the guards, sharing the two log
// evaluations per term.
struct GuardedLogs {
  double l1;   // log n
  double l2;   // ln(log n), may be < 1
  double l2g;  // log log n = max(l2, 1)
  double l3;   // ln(log log n) >= 0
};

inline GuardedLogs guarded_logs(long long n) {
  const double l1 = std::max(std::log(static_cast<double>(n)), 1.0);
  const double l2 = std::log(l1);
  const double l2g = std::max(l2, 1.0);
  const double l3 = l2 > 1.0 ? std::log(l2) : 0.0;
  return {l1, l2, l2g, l3};
}

}  // namespace detail

// (log n)^a (log log n)^b / n.
inline double weight(long long n, const WeightParams& p) {
  if (n < 1) throw std::invalid_argument("weight: n must be >= 1");
  const auto g = detail::guarded_logs(n);
  return std::exp(p.a * g.l2 + p.b * g.l3) / static_cast<double>(n);
}

// phi(n) = sqrt(pi^2 n / (8 log log n)), the Chung normalization.
inline double phi(long long n) {
  if (n < 1) throw std::invalid_argument("phi: n must be >= 1");
  const double pi2 = analytic::kPi * analytic::kPi;
  return std::sqrt(pi2 * static_cast<double>(n) / (8.0 * guarded_loglog(static_cast<double>(n))));
}

// Exact value of int_{e^e}^inf (log x)^a (log log x)^b x^{-1}
// exp(-log log x / eps^2) dx, which after u = log x, y = ln u collapses to
// theta^{-(b+1)} * upper_incomplete_gamma(b+1, theta) with
// theta = 1/eps^2 - 1 - a.  This is the quantity the critically-scaled
// series converges to, and it stays evaluable arbitrarily close to the
// critical eps where direct summation is hopeless.
inline double kernel_sum_integral(const WeightParams& p, double eps) {
  validate(p);
  if (!(eps > 0.0)) throw std::invalid_argument("kernel_sum_integral: eps must be > 0");
  const double theta = 1.0 / (eps * eps) - 1.0 - p.a;
  if (!(theta > 0.0)) {
    throw DivergenceError(
        "kernel_sum_integral: series diverges for eps >= 1/sqrt(1+a) = " +
        std::to_string(critical_epsilon(p)));
  }
  return std::pow(theta, -(p.b + 1.0)) *
         analytic::upper_incomplete_gamma(p.b + 1.0, theta);
}

// Direct partial sum sum_{n<=n_max} (log n)^a (log log n)^b n^{-1}
// exp(-log log n / eps^2), with a closed-form bound on the omitted tail.
// Gated to theta = 1/eps^2 - 1 - a >= 1: closer to critical the summand mass
// sits near n = exp(exp((b+1)/theta)), far beyond any reachable n_max, and
// kernel_sum_integral is the honest evaluator there.
inline KernelSumResult kernel_sum_direct(const WeightParams& p, double eps,
                                         long long n_max,
                                         const CancelToken* cancel = nullptr) {
  validate(p);
  if (!(eps > 0.0)) throw std::invalid_argument("kernel_sum_direct: eps must be > 0");
  if (n_max < 100) throw std::invalid_argument("kernel_sum_direct: n_max must be >= 100");
  const double inv_eps2 = 1.0 / (eps * eps);
  const double theta = inv_eps2 - 1.0 - p.a;
  if (!(theta >= 1.0 - 1e-9)) {  // slack so eps = 1/sqrt(2+a) lands inside

    throw ModeError(
        "kernel_sum_direct: requires 1/eps^2 - 1 - a >= 1; "
        "use kernel_sum_integral for the near-critical range");
  }
  double sum = 0.0;
  for (long long n = 1; n <= n_max; ++n) {
    detail::check_cancel(cancel, n);
    const auto g = detail::guarded_logs(n);
    sum += std::exp(p.a * g.l2 + p.b * g.l3 - g.l2g * inv_eps2) /
           static_cast<double>(n);
  }

  // Tail: sum_{n>n_max} term(n) <= int_{n_max}^inf g(x) dx; with u = log x
  // the integrand is u^{-(theta+1)} (ln u)^b.  For b <= 0 drop (ln u)^b <= 1
  // (u >= e); for b > 0 majorize (ln u)^b <= (ln U)^b (u/U)^delta with
  // delta = b / ln U, the smallest delta making the ratio decreasing.
  const double big_u = guarded_log(static_cast<double>(n_max));
  double tail = 0.0;
  if (p.b <= 0.0) {
    tail = std::pow(big_u, -theta) / theta;
  } else {
    const double delta = p.b / std::log(big_u);
    if (!(delta < theta)) {
      throw ModeError("kernel_sum_direct: n_max too small for a tail bound at this (b, eps)");
    }
    tail = std::pow(std::log(big_u), p.b) * std::pow(big_u, -theta) / (theta - delta);
  }

  const double scaled = std::pow(critical_epsilon(p) - eps, p.b + 1.0) *
                        (4.0 / analytic::kPi) * (sum + tail / 2.0);
  return {sum, n_max, tail, scaled};
}

struct ScaledLimitPoint {
  double eps = 0.0;
  double scaled_value = 0.0;
  double deviation = 0.0;  // |scaled_value / limit - 1|
};

// For each eps on the grid, the critically-scaled integral-mode value
// (1/sqrt(1+a) - eps)^{b+1} (4/pi) * kernel_sum_integral, times the
// closed-form exp(2 (1+a)^{3/2} tau) boundary factor, against
// theorem1_constant(a, b, tau).  Deviations shrink as eps approaches
// critical; the finite-eps gap is reported, not asserted.
inline std::vector<ScaledLimitPoint> scaled_limit_check(
    const WeightParams& p, double tau, std::span<const double> eps_grid) {
  validate(p);
  const double limit = analytic::theorem1_constant(p.a, p.b, tau);
  const double tau_factor = std::exp(2.0 * std::pow(1.0 + p.a, 1.5) * tau);
  std::vector<ScaledLimitPoint> out;
  out.reserve(eps_grid.size());
  for (const double eps : eps_grid) {
    const double scaled = std::pow(critical_epsilon(p) - eps, p.b + 1.0) *
                          (4.0 / analytic::kPi) * kernel_sum_integral(p, eps) *
                          tau_factor;
    out.push_back({eps, scaled, std::fabs(scaled / limit - 1.0)});
  }
  return out;
}

// q^{-(b+1)} * upper_incomplete_gamma(b+1, q/eps^2): the eps^{-2(b+1)}-scaled
// value of the 1/(n log n)-weighted kernel sum with rate q, converging to
// Gamma(b+1) q^{-(b+1)} as eps -> inf.
inline double theorem2_kernel_limit(double q, double b, double eps) {
  if (!(q > 0.0)) throw std::domain_error("theorem2_kernel_limit: q must be > 0");
  if (!(b > -1.0)) throw std::domain_error("theorem2_kernel_limit: requires b > -1");
  if (!(eps > 0.0)) throw std::invalid_argument("theorem2_kernel_limit: eps must be > 0");
  return std::pow(q, -(b + 1.0)) *
         analytic::upper_incomplete_gamma(b + 1.0, q / (eps * eps));
}

namespace detail {

// Shared loop for the two integral tests.  kernel(n, psi) supplies the
// summand; psi positivity is a domain error, and psi must be non-increasing
// over the evaluated range past e^e ("eventually non-increasing").
template <typename Kernel>
KernelSumResult psi_partial_sum(const PsiSpec& psi, long long n_max,
                                const CancelToken* cancel, Kernel kernel) {
  if (n_max < 1) throw std::invalid_argument("psi partial sum: n_max must be >= 1");
  double sum = 0.0;
  double prev_psi = 0.0;
  for (long long n = 1; n <= n_max; ++n) {
    check_cancel(cancel, n);
    const double value = psi.eval(static_cast<double>(n));
    if (!(value > 0.0)) {
      throw std::domain_error("psi must be positive; violated at n = " + std::to_string(n));
    }
    if (n > 16 && value > prev_psi * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "psi must be eventually non-increasing; increases at n = " + std::to_string(n));
    }
    prev_psi = value;
    sum += kernel(n, value);
  }
  return {sum, n_max, 0.0, sum};
}

}  // namespace detail

// Partial sum of sum_n (log n)^a (log log n)^b n^{-1} exp(-1/psi(n)^2).
inline KernelSumResult j_ab_partial(const PsiSpec& psi, const WeightParams& p,
                                    long long n_max,
                                    const CancelToken* cancel = nullptr) {
  validate(p);
  return detail::psi_partial_sum(psi, n_max, cancel, [&](long long n, double v) {
    const auto g = detail::guarded_logs(n);
    return std::exp(p.a * g.l2 + p.b * g.l3 - 1.0 / (v * v)) / static_cast<double>(n);
  });
}

// Partial sum of sum_n 1/(n psi(n)^2) exp(-1/psi(n)^2).
inline KernelSumResult j_chung_partial(const PsiSpec& psi, long long n_max,
                                       const CancelToken* cancel = nullptr) {
  return detail::psi_partial_sum(psi, n_max, cancel, [&](long long n, double v) {
    const double inv2 = 1.0 / (v * v);
    return inv2 * std::exp(-inv2) / static_cast<double>(n);
  });
}

enum class SeriesVerdict { kConverges, kDiverges };

inline const char* to_string(SeriesVerdict v) {
  return v == SeriesVerdict::kConverges ? "Converges" : "Diverges";
}

// For psi_c(n) = c / sqrt(log log n) the summand of J_ab is
// (log n)^{a - 1/c^2} (log log n)^b / n, so the test is exactly
// a - 1/c^2 < -1, i.e. c < 1/sqrt(1+a); the boundary diverges because
// b > -1.
inline SeriesVerdict classify_psi_family(double c, const WeightParams& p) {
  if (!(c > 0.0)) throw std::invalid_argument("classify_psi_family: c must be > 0");
  validate(p);
  return c < critical_epsilon(p) ? SeriesVerdict::kConverges : SeriesVerdict::kDiverges;
}

}  // namespace smalldev::weights
