#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smalldev/errors.hpp"
#include "smalldev/rng.hpp"

namespace smalldev::mc {

// Atoms at exp(e^k) stay inside double range only for k <= 6
// (ln x_7 = e^7 = 1096.6 > 709).
inline constexpr int kMaxSamplableAtomIndex = 6;

// A mean-zero, finite-variance step law.  Every variant exposes its
// variance, optional support bound, exact tail second moments (in log
// scale, so thresholds up to exp(e^30) work) and exact truncated moments.
class DistributionSpec {
 public:
  enum class Kind {
    kRademacher,
    kStdNormal,
    kCenteredUniform,
    kTwoPoint,
    kAtomsDoublyExp,
  };

  static DistributionSpec rademacher() {
    DistributionSpec d(Kind::kRademacher);
    d.sigma2_ = 1.0;
    d.support_bound_ = 1.0;
    return d;
  }

  static DistributionSpec std_normal() {
    DistributionSpec d(Kind::kStdNormal);
    d.sigma2_ = 1.0;
    return d;
  }

  static DistributionSpec centered_uniform(double half_width) {
    if (!(half_width > 0.0)) {
      throw std::invalid_argument("centered_uniform: half_width must be > 0");
    }
    DistributionSpec d(Kind::kCenteredUniform);
    d.half_width_ = half_width;
    d.sigma2_ = half_width * half_width / 3.0;
    d.support_bound_ = half_width;
    return d;
  }

  // Atoms v (probability p) and -pv/(1-p) (probability 1-p), centered by
  // construction.  The default p in the CLI, 1/(1+v^2), gives sigma^2 = 1.
  static DistributionSpec two_point(double v, double p) {
    if (!(v != 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("two_point: v must be finite and nonzero");
    }
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("two_point: p must be in (0, 1)");
    }
    DistributionSpec d(Kind::kTwoPoint);
    d.v_ = v;
    d.p_ = p;
    d.other_atom_ = -p * v / (1.0 - p);
    d.sigma2_ = p * v * v + (1.0 - p) * d.other_atom_ * d.other_atom_;
    d.support_bound_ = std::max(std::fabs(v), std::fabs(d.other_atom_));
    return d;
  }

  // Symmetric atoms at x_k = exp(e^k), k = 1..k_max, with pair mass
  // p_k = c/(k^2 x_k^2) and the remaining mass at 0: finite variance
  // c * sum k^{-2}, but log log x_k * E[X^2 1{|X| >= x_k}] ~ c instead of
  // vanishing.  Sampling is only possible while the atoms are representable.
  static DistributionSpec atoms_doubly_exp(double c, int k_max) {
    if (!(c > 0.0)) throw std::invalid_argument("atoms_doubly_exp: c must be > 0");
    if (k_max < 1) throw std::invalid_argument("atoms_doubly_exp: k_max must be >= 1");
    DistributionSpec d(Kind::kAtomsDoublyExp);
    d.c_ = c;
    d.k_max_ = k_max;
    double s = 0.0;
    for (int k = 1; k <= k_max; ++k) s += 1.0 / (static_cast<double>(k) * k);
    d.sigma2_ = c * s;
    if (k_max <= kMaxSamplableAtomIndex) {
      d.support_bound_ = std::exp(std::exp(static_cast<double>(k_max)));
      double mass = 0.0;
      d.atom_cdf_.reserve(static_cast<std::size_t>(k_max));
      for (int k = 1; k <= k_max; ++k) {
        // p_k = c exp(-2 e^k) / k^2, evaluated in log scale
        const double pk = c * std::exp(-2.0 * std::exp(static_cast<double>(k))) /
                          (static_cast<double>(k) * k);
        mass += pk;
        d.atom_cdf_.push_back(mass);
      }
      if (mass > 1.0) {
        throw std::invalid_argument("atoms_doubly_exp: atom masses exceed 1; reduce c");
      }
    }
    return d;
  }

  Kind kind() const { return kind_; }
  double sigma2() const { return sigma2_; }
  double sigma() const { return std::sqrt(sigma2_); }
  std::optional<double> support_bound() const { return support_bound_; }
  double atom_scale() const { return c_; }
  int atom_count() const { return k_max_; }

  std::string name() const {
    switch (kind_) {
      case Kind::kRademacher: return "rademacher";
      case Kind::kStdNormal: return "normal";
      case Kind::kCenteredUniform: return "uniform";
      case Kind::kTwoPoint: return "twopoint";
      case Kind::kAtomsDoublyExp: return "atoms";
    }
    return "unknown";
  }

  bool samplable() const {
    return kind_ != Kind::kAtomsDoublyExp || k_max_ <= kMaxSamplableAtomIndex;
  }

  void require_samplable() const {
    if (!samplable()) {
      throw CapabilityError(
          "atoms_doubly_exp: atom exp(e^" + std::to_string(k_max_) +
          ") exceeds double range; sampling needs k_max <= " +
          std::to_string(kMaxSamplableAtomIndex));
    }
  }

  double sample(rng::Stream& stream) const {
    switch (kind_) {
      case Kind::kRademacher:
        return stream.uniform01() < 0.5 ? -1.0 : 1.0;
      case Kind::kStdNormal:
        return stream.gaussian();
      case Kind::kCenteredUniform:
        return (2.0 * stream.uniform01() - 1.0) * half_width_;
      case Kind::kTwoPoint:
        return stream.uniform01() < p_ ? v_ : other_atom_;
      case Kind::kAtomsDoublyExp: {
        require_samplable();
        const double u = stream.uniform01();
        if (u < atom_cdf_.back()) {
          for (int k = 1; k <= k_max_; ++k) {
            if (u < atom_cdf_[static_cast<std::size_t>(k - 1)]) {
              const double x = std::exp(std::exp(static_cast<double>(k)));
              // symmetric split of the pair mass
              const double lower = k > 1 ? atom_cdf_[static_cast<std::size_t>(k - 2)] : 0.0;
              const double mid = lower + (atom_cdf_[static_cast<std::size_t>(k - 1)] - lower) / 2.0;
              return u < mid ? x : -x;
            }
          }
        }
        return 0.0;
      }
    }
    return 0.0;
  }

  // E[X^2 1{|X| >= t}] with the threshold supplied as L = ln t.
  double tail_second_moment_log(double log_t) const {
    switch (kind_) {
      case Kind::kRademacher:
        return log_t <= 0.0 ? 1.0 : 0.0;  // |X| = 1
      case Kind::kStdNormal: {
        if (log_t >= 700.0) return 0.0;
        const double t = std::exp(log_t);
        if (t <= 0.0) return 1.0;
        // 2 (t pdf(t) + Qbar(t))
        const double pdf = std::exp(-t * t / 2.0) / std::sqrt(2.0 * std::numbers::pi);
        const double qbar = 0.5 * std::erfc(t / std::numbers::sqrt2);
        return 2.0 * (t * pdf + qbar);
      }
      case Kind::kCenteredUniform: {
        if (log_t >= std::log(half_width_)) return 0.0;
        const double t = std::exp(log_t);
        if (t <= 0.0) return sigma2_;
        return (half_width_ * half_width_ * half_width_ - t * t * t) / (3.0 * half_width_);
      }
      case Kind::kTwoPoint: {
        double m = 0.0;
        if (std::log(std::fabs(v_)) >= log_t) m += p_ * v_ * v_;
        if (other_atom_ != 0.0 && std::log(std::fabs(other_atom_)) >= log_t) {
          m += (1.0 - p_) * other_atom_ * other_atom_;
        }
        return m;
      }
      case Kind::kAtomsDoublyExp: {
        // x_k >= t  <=>  e^k >= L; tolerance so L = e^k hits atom k exactly
        double s = 0.0;
        for (int k = 1; k <= k_max_; ++k) {
          if (std::exp(static_cast<double>(k)) >= log_t * (1.0 - 1e-12)) {
            s += c_ / (static_cast<double>(k) * k);
          }
        }
        return s;
      }
    }
    return 0.0;
  }

  // E[X'] for X' = X 1{|X| <= threshold}.
  double truncated_mean(double threshold) const {
    switch (kind_) {
      case Kind::kRademacher:
      case Kind::kStdNormal:
      case Kind::kCenteredUniform:
      case Kind::kAtomsDoublyExp:
        return 0.0;  // symmetric truncation of a symmetric law
      case Kind::kTwoPoint: {
        double m = 0.0;
        if (std::fabs(v_) <= threshold) m += p_ * v_;
        if (std::fabs(other_atom_) <= threshold) m += (1.0 - p_) * other_atom_;
        return m;
      }
    }
    return 0.0;
  }

  // Var(X* ) = Var(X' - E X') = E X'^2 - (E X')^2, exactly per variant.
  double truncated_variance(double threshold) const {
    if (!(threshold > 0.0)) return 0.0;
    switch (kind_) {
      case Kind::kRademacher:
        return threshold >= 1.0 ? 1.0 : 0.0;
      case Kind::kStdNormal:
        return 1.0 - tail_second_moment_log(std::log(threshold));
      case Kind::kCenteredUniform: {
        const double t = std::min(threshold, half_width_);
        return t * t * t / (3.0 * half_width_);
      }
      case Kind::kTwoPoint: {
        double m1 = 0.0;
        double m2 = 0.0;
        if (std::fabs(v_) <= threshold) {
          m1 += p_ * v_;
          m2 += p_ * v_ * v_;
        }
        if (std::fabs(other_atom_) <= threshold) {
          m1 += (1.0 - p_) * other_atom_;
          m2 += (1.0 - p_) * other_atom_ * other_atom_;
        }
        return m2 - m1 * m1;
      }
      case Kind::kAtomsDoublyExp: {
        // keep atoms with x_k <= threshold  <=>  e^k <= ln threshold
        const double lt = std::log(threshold);
        double m2 = 0.0;
        for (int k = 1; k <= k_max_; ++k) {
          if (std::exp(static_cast<double>(k)) <= lt * (1.0 + 1e-12)) {
            m2 += c_ / (static_cast<double>(k) * k);
          }
        }
        return m2;
      }
    }
    return 0.0;
  }

 private:
  explicit DistributionSpec(Kind kind) : kind_(kind) {}

  Kind kind_;
  double sigma2_ = 0.0;
  std::optional<double> support_bound_;
  double half_width_ = 0.0;
  double v_ = 0.0;
  double p_ = 0.0;
  double other_atom_ = 0.0;
  double c_ = 0.0;
  int k_max_ = 0;
  std::vector<double> atom_cdf_;
};

}  // namespace smalldev::mc
