#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smalldev::analytic {

inline constexpr double kPi = std::numbers::pi;

// Which series produced a small-ball value.  The theta form converges in a
// couple of terms for small x, the reflection form for large x; they are
// the same function and the tests hold them to 1e-10 of each other on a grid.
enum class Representation { kThetaSeries, kReflectionSeries };

inline const char* to_string(Representation r) {
  return r == Representation::kThetaSeries ? "theta-series" : "reflection-series";
}

struct SmallBallResult {
  double value = 0.0;        // P(sup_{0<=s<=1} |W(s)| <= x), clamped to [0,1]
  int terms_used = 0;
  Representation representation = Representation::kThetaSeries;
  double error_bound = 0.0;  // first omitted term of the alternating series
};

inline constexpr double kRepresentationSwitchX = 0.9;
inline constexpr double kDefaultTol = 1e-12;
inline constexpr int kMaxSeriesTerms = 200000;

// (4/pi) sum_{k>=0} (-1)^k/(2k+1) exp(-pi^2 (2k+1)^2 / (8 x^2)).
// Alternating with strictly decreasing terms, so the remainder after any
// partial sum is bounded by the first omitted term.
inline SmallBallResult small_ball_theta(double x, double tol = kDefaultTol) {
  if (!(x > 0.0)) throw std::domain_error("small_ball_theta: x must be > 0");
  const double q = kPi * kPi / (8.0 * x * x);
  const double scale = 4.0 / kPi;
  double sum = 0.0;
  double term = scale * std::exp(-q);
  double sign = 1.0;
  for (int k = 0;; ++k) {
    sum += sign * term;
    const double m = 2.0 * (k + 1) + 1.0;
    const double next = scale * std::exp(-q * m * m) / m;
    if (next <= tol) {
      return {std::clamp(sum, 0.0, 1.0), k + 1, Representation::kThetaSeries, next};
    }
    if (k + 1 >= kMaxSeriesTerms) {
      throw std::runtime_error("small_ball_theta: series did not reach tolerance");
    }
    term = next;
    sign = -sign;
  }
}

// sum_{j in Z} (-1)^j [Phi((2j+1)x) - Phi((2j-1)x)]
//   = erf(x/sqrt(2)) + 2 sum_{j>=1} (-1)^j [Phi((2j+1)x) - Phi((2j-1)x)].
// The increments are normal-density masses over width-2x windows marching
// right, hence positive and decreasing: first-omitted-term bound again.
inline SmallBallResult small_ball_reflection(double x, double tol = kDefaultTol) {
  if (!(x > 0.0)) throw std::domain_error("small_ball_reflection: x must be > 0");
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const auto window = [&](int j) {
    const double lo = (2.0 * j - 1.0) * x * inv_sqrt2;
    const double hi = (2.0 * j + 1.0) * x * inv_sqrt2;
    return 0.5 * (std::erfc(lo) - std::erfc(hi));
  };
  double sum = std::erf(x * inv_sqrt2);
  double sign = -1.0;
  for (int j = 1;; ++j) {
    const double term = 2.0 * window(j);
    sum += sign * term;
    const double next = 2.0 * window(j + 1);
    if (next <= tol) {
      return {std::clamp(sum, 0.0, 1.0), j + 1, Representation::kReflectionSeries, next};
    }
    if (j >= kMaxSeriesTerms) {
      throw std::runtime_error("small_ball_reflection: series did not reach tolerance");
    }
    sign = -sign;
  }
}

// P(sup_{0<=s<=1} |W(s)| <= x) to within tol, picking the representation
// that converges fastest at this x.
inline SmallBallResult small_ball_sup(double x, double tol = kDefaultTol) {
  if (!(x > 0.0)) throw std::domain_error("small_ball_sup: x must be > 0");
  if (!(tol > 0.0) || tol > 1e-6) {
    throw std::invalid_argument("small_ball_sup: tol must be in (0, 1e-6]");
  }
  return x <= kRepresentationSwitchX ? small_ball_theta(x, tol)
                                     : small_ball_reflection(x, tol);
}

// Leading-order form (4/pi) exp(-pi^2/(8 x^2)), exact as x -> 0.
inline double small_ball_asymptotic(double x) {
  if (!(x > 0.0)) throw std::domain_error("small_ball_asymptotic: x must be > 0");
  return (4.0 / kPi) * std::exp(-kPi * kPi / (8.0 * x * x));
}

struct SmallBallBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Two-sided envelope valid for every x > 0:
//   (2/pi) e^{-pi^2/(8x^2)} <= P(...) <= (4/pi) e^{-pi^2/(8x^2)},
// the lower half because the k=1 theta term is at most half the k=0 term.
inline SmallBallBounds small_ball_bounds(double x) {
  if (!(x > 0.0)) throw std::domain_error("small_ball_bounds: x must be > 0");
  const double e = std::exp(-kPi * kPi / (8.0 * x * x));
  return {(2.0 / kPi) * e, std::min(1.0, (4.0 / kPi) * e)};
}

// Gamma function on (0, inf) by the Lanczos approximation (g = 7, 9
// coefficients), reflected onto (0, 1/2).  Good to ~15 digits on (0, 30).
inline double gamma_fn(double z) {
  if (!(z > 0.0)) throw std::domain_error("gamma_fn: z must be > 0");
  static constexpr double kG = 7.0;
  static constexpr double kC[9] = {
      0.99999999999980993,
      676.5203681218851,
      -1259.1392167224028,
      771.32342877765313,
      -176.61502916214059,
      12.507343278686905,
      -0.13857109526572012,
      9.9843695780195716e-6,
      1.5056327351493116e-7,
  };
  if (z < 0.5) {
    return kPi / (std::sin(kPi * z) * gamma_fn(1.0 - z));
  }
  const double zz = z - 1.0;
  double a = kC[0];
  for (int i = 1; i < 9; ++i) a += kC[i] / (zz + i);
  const double t = zz + kG + 0.5;
  return std::sqrt(2.0 * kPi) * std::pow(t, zz + 0.5) * std::exp(-t) * a;
}

inline constexpr int kIncompleteGammaMaxIter = 200;

// Upper incomplete gamma integral_theta^inf y^{s-1} e^{-y} dy.  Lower series
// for theta < s+1, Lentz continued fraction otherwise (DLMF 8.9.2); both
// capped at 200 iterations with an explicit convergence check.
inline double upper_incomplete_gamma(double s, double theta) {
  if (!(s > 0.0)) throw std::domain_error("upper_incomplete_gamma: s must be > 0");
  if (!(theta >= 0.0)) throw std::domain_error("upper_incomplete_gamma: theta must be >= 0");
  if (theta == 0.0) return gamma_fn(s);
  const double log_pref = s * std::log(theta) - theta;
  if (theta < s + 1.0) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n <= kIncompleteGammaMaxIter; ++n) {
      term *= theta / (s + n);
      sum += term;
      if (term < sum * 1e-17) {
        return gamma_fn(s) - std::exp(log_pref) * sum;
      }
    }
    throw std::runtime_error("upper_incomplete_gamma: series did not converge");
  }
  constexpr double kTiny = 1e-300;
  double b = theta + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kIncompleteGammaMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) {
      return std::exp(log_pref) * h;
    }
  }
  throw std::runtime_error("upper_incomplete_gamma: continued fraction did not converge");
}

// sum_{k>=0} (-1)^k / (2k+1)^s for s > 1 (Dirichlet beta), absolute error
// <= 1e-12.  Direct alternating summation when the first-omitted-term bound
// gets there in a reasonable number of terms; otherwise the Cohen-Rodriguez
// Villegas-Zagier acceleration, whose error for moment sequences of a
// positive measure on [0,1] decays like (3+sqrt(8))^-n.
inline double alt_odd_series(double s) {
  if (!(s > 1.0)) throw std::invalid_argument("alt_odd_series: requires s > 1");
  const double needed_m = std::pow(10.0, 13.0 / s);  // (2k+1)^s >= 1e13
  if (needed_m <= 2.0e7) {
    const auto kmax = static_cast<long long>(needed_m / 2.0) + 2;
    double sum = 0.0;
    double comp = 0.0;  // Kahan compensation
    double sign = 1.0;
    for (long long k = 0; k <= kmax; ++k) {
      const double y = sign * std::pow(2.0 * static_cast<double>(k) + 1.0, -s) - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      sign = -sign;
    }
    // midpoint correction: half the first omitted term, with its sign
    sum += sign * 0.5 * std::pow(2.0 * static_cast<double>(kmax + 1) + 1.0, -s);
    return sum;
  }
  constexpr int kN = 36;
  double d = std::pow(3.0 + std::sqrt(8.0), kN);
  d = (d + 1.0 / d) / 2.0;
  double b = -1.0;
  double c = -d;
  double sum = 0.0;
  for (int k = 0; k < kN; ++k) {
    c = b - c;
    sum += c * std::pow(2.0 * k + 1.0, -s);
    b *= (k + kN) * (k - kN) / ((k + 0.5) * (k + 1.0));
  }
  return sum / d;
}

// (4/pi) (1/(2(1+a)^{3/2}))^{b+1} Gamma(b+1) exp(2 (1+a)^{3/2} tau):
// the limit of the critically-scaled weighted series for exponents (a, b)
// and boundary shift tau.
inline double theorem1_constant(double a, double b, double tau) {
  if (!(a > -1.0)) throw std::domain_error("theorem1_constant: requires a > -1");
  if (!(b > -1.0)) throw std::domain_error("theorem1_constant: requires b > -1");
  if (!std::isfinite(tau)) throw std::domain_error("theorem1_constant: tau must be finite");
  const double s = std::pow(1.0 + a, 1.5);
  return (4.0 / kPi) * std::pow(1.0 / (2.0 * s), b + 1.0) * gamma_fn(b + 1.0) *
         std::exp(2.0 * s * tau);
}

// (4/pi) Gamma(b+1) sum_{k>=0} (-1)^k/(2k+1)^{2b+3}: the large-epsilon limit
// of the eps^{-2(b+1)}-scaled series with 1/(n log n) weights.
inline double theorem2_constant(double b) {
  if (!(b > -1.0)) throw std::domain_error("theorem2_constant: requires b > -1");
  return (4.0 / kPi) * gamma_fn(b + 1.0) * alt_odd_series(2.0 * b + 3.0);
}

enum class Theorem { kT1, kT2 };

inline const char* to_string(Theorem t) { return t == Theorem::kT1 ? "T1" : "T2"; }

// A limit constant together with the parameters that produced it.  Positive
// for every admissible parameter set (a > -1, b > -1, tau finite); a and tau
// apply to the T1 family only.
struct LimitConstant {
  double value = 0.0;
  Theorem theorem = Theorem::kT1;
  double a = 0.0;
  double b = 0.0;
  double tau = 0.0;

  static LimitConstant t1(double a, double b, double tau) {
    return {theorem1_constant(a, b, tau), Theorem::kT1, a, b, tau};
  }
  static LimitConstant t2(double b) {
    return {theorem2_constant(b), Theorem::kT2, 0.0, b, 0.0};
  }
};

}  // namespace smalldev::analytic
