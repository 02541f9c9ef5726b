#include "smalldev/weights.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "smalldev/analytic.hpp"
#include "smalldev/errors.hpp"

namespace w = smalldev::weights;
namespace an = smalldev::analytic;
using smalldev::CancelledError;
using smalldev::DivergenceError;
using smalldev::ModeError;

namespace {

// Simpson quadrature of the kernel integrand over u = log x, used as an
// independent check of the closed-form identity.
double kernel_integral_quadrature(double a, double b, double eps) {
  const double inv_eps2 = 1.0 / (eps * eps);
  const auto f = [&](double u) {
    return std::pow(u, a + 0.0) * std::pow(std::log(u), b) * std::exp(-std::log(u) * inv_eps2);
  };
  // integrand in u: u^a (ln u)^b u^{-1/eps^2}; integrate u in [e, U]
  const double hi = 5000.0;
  const int n = 400000;
  const double lo = std::numbers::e;
  const double h = (hi - lo) / n;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST(GuardedLogs, Plateau) {
  EXPECT_DOUBLE_EQ(w::guarded_log(1.0), 1.0);
  EXPECT_DOUBLE_EQ(w::guarded_loglog(1.0), 1.0);
  EXPECT_DOUBLE_EQ(w::guarded_loglog(15.0), 1.0);  // 15 < e^e
  EXPECT_NEAR(w::guarded_loglog(16.0), std::log(std::log(16.0)), 1e-15);
  EXPECT_NEAR(w::guarded_loglog_from_log(std::exp(20.0)), 20.0, 1e-12);
  EXPECT_DOUBLE_EQ(w::guarded_loglog_from_log(0.7), 1.0);
}

TEST(Weight, GuardedValues) {
  for (const auto& p : {w::WeightParams{0, 0}, w::WeightParams{1, 1}, w::WeightParams{3, -0.5}}) {
    EXPECT_DOUBLE_EQ(w::weight(1, p), 1.0);
  }
  // n = 15 sits below e^e, so log log 15 = 1 and the weight is (log 15)/15
  EXPECT_NEAR(w::weight(15, {1, 1}), 0.18053668007348067, 1e-15);
  EXPECT_NEAR(w::weight(1000000, {0, 0}), 1e-6, 1e-20);
  EXPECT_THROW(w::weight(0, {0, 0}), std::invalid_argument);
}

TEST(Phi, Values) {
  EXPECT_NEAR(w::phi(1), 1.1107207345395916, 1e-14);
  EXPECT_NEAR(w::phi(10000), 74.54120825725605, 1e-10);
  EXPECT_NEAR(w::phi(1000000), 685.4483350328203, 1e-9);
  EXPECT_THROW(w::phi(0), std::invalid_argument);
}

TEST(KernelSumDirect, GatesAndMonotonicity) {
  // theta = 1/0.64 - 1 = 0.5625 < 1: direct mode refuses and points at the integral
  EXPECT_THROW(w::kernel_sum_direct({0, 0}, 0.8, 100000), ModeError);
  EXPECT_THROW(w::kernel_sum_direct({0, 0}, 0.5, 42), std::invalid_argument);

  const auto half = w::kernel_sum_direct({0, 0}, 0.5, 50000);
  const auto full = w::kernel_sum_direct({0, 0}, 0.5, 100000);
  EXPECT_GE(full.partial_sum, half.partial_sum);
  EXPECT_GT(half.partial_sum, 0.0);
}

TEST(KernelSumDirect, TailBoundFormula) {
  // b = 0: tail = (log n_max)^-theta / theta with theta = 3
  const auto r = w::kernel_sum_direct({0, 0}, 0.5, 10000000);
  const double expected = std::pow(std::log(1e7), -3.0) / 3.0;
  EXPECT_NEAR(r.tail_bound, expected, 1e-15);
  EXPECT_LE(r.tail_bound, 8.1e-5);
  EXPECT_GE(r.tail_bound, 7.8e-5);
}

TEST(KernelSumDirect, BracketsIntegralWithStartCorrection) {
  // The direct sum uses guarded logs from n = 1 while the closed form is
  // the integral from e^e; bracket after removing the first 15 terms:
  //   P - C15 - sliver <= I <= P - C15 + gap + tail
  // with sliver = int_{15}^{e^e} g <= 0.16 g(15) and
  // gap = int_{e^e}^{16} g <= 0.85 g(15.16).
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{
           {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {3.0, -0.5}}) {
    for (const double theta : {1.0, 2.0, 3.0}) {
      const double eps = 1.0 / std::sqrt(theta + 1.0 + a);
      const w::WeightParams p{a, b};
      const auto direct = w::kernel_sum_direct(p, eps, 1000000);
      const double integral = w::kernel_sum_integral(p, eps);
      double c15 = 0.0;
      const double inv_eps2 = 1.0 / (eps * eps);
      for (long long n = 1; n <= 15; ++n) {
        c15 += w::weight(n, p) * std::exp(-w::guarded_loglog(double(n)) * inv_eps2);
      }
      const auto g = [&](double x) {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        return std::pow(l1, a) * std::pow(l2, b) * std::exp(-l2 * inv_eps2) / x;
      };
      const double lo = direct.partial_sum - c15 - 0.16 * g(15.0);
      const double hi = direct.partial_sum - c15 + 0.85 * g(15.16) + direct.tail_bound;
      EXPECT_GE(integral, lo) << "a=" << a << " b=" << b << " theta=" << theta;
      EXPECT_LE(integral, hi) << "a=" << a << " b=" << b << " theta=" << theta;
    }
  }
}

TEST(KernelSumIntegral, ClosedFormsAndDivergence) {
  // theta = 1 at eps = 1/sqrt(2), b = 0: value e^-1
  EXPECT_NEAR(w::kernel_sum_integral({0, 0}, 1.0 / std::sqrt(2.0)), std::exp(-1.0), 1e-13);
  // b = 0: e^-theta / theta across a theta grid
  for (const double theta : {0.5, 1.0, 2.0, 5.0}) {
    const double eps = 1.0 / std::sqrt(theta + 1.0);
    EXPECT_NEAR(w::kernel_sum_integral({0, 0}, eps), std::exp(-theta) / theta, 1e-12);
  }
  EXPECT_THROW(w::kernel_sum_integral({0, 0}, 1.0), DivergenceError);
  EXPECT_THROW(w::kernel_sum_integral({0, 0}, 1.2), DivergenceError);
  EXPECT_THROW(w::kernel_sum_integral({3, 0}, 0.6), DivergenceError);  // critical 0.5
  // divergence at the critical point (exactly representable for a = 0, 3),
  // convergence just below it
  EXPECT_THROW(w::kernel_sum_integral({0, 0}, 1.0), DivergenceError);
  EXPECT_THROW(w::kernel_sum_integral({3, 0}, 0.5), DivergenceError);
  for (const double a : {0.0, 1.0, 3.0}) {
    const double critical = 1.0 / std::sqrt(1.0 + a);
    EXPECT_THROW(w::kernel_sum_integral({a, 0}, critical + 1e-12), DivergenceError)
        << "a = " << a;
    EXPECT_GT(w::kernel_sum_integral({a, 0}, critical - 1e-9), 0.0) << "a = " << a;
  }
}

TEST(KernelSumIntegral, MatchesQuadrature) {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 0.5}}) {
    const double eps = 0.45;
    const double quad = kernel_integral_quadrature(a, b, eps);
    EXPECT_NEAR(w::kernel_sum_integral({a, b}, eps), quad, 1e-8) << "a=" << a << " b=" << b;
  }
}

TEST(ScaledLimitCheck, ApproachesTheorem1Constant) {
  const std::vector<double> grid{0.99, 0.995, 0.999};
  const auto pts = w::scaled_limit_check({0, 0}, 0.0, grid);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_NEAR(pts[0].scaled_value, 0.6144824649986635, 1e-12);
  EXPECT_NEAR(pts[1].scaled_value, 0.6255148790786256, 1e-12);
  EXPECT_NEAR(pts[2].scaled_value, 0.6343930366998569, 1e-12);
  EXPECT_GT(pts[0].deviation, pts[1].deviation);
  EXPECT_GT(pts[1].deviation, pts[2].deviation);
  EXPECT_LE(pts[2].deviation, 0.01);

  // tau enters as the closed-form factor, so deviations are unchanged
  const auto shifted = w::scaled_limit_check({0, 0}, 0.5, grid);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(shifted[i].deviation, pts[i].deviation, 1e-12);
    EXPECT_NEAR(shifted[i].scaled_value / pts[i].scaled_value, std::exp(1.0), 1e-12);
  }
}

TEST(ScaledLimitCheck, FractionalExponentPair) {
  // (a, b) = (3, -0.5): critical eps is 0.5
  const std::vector<double> grid{0.40, 0.45, 0.49};
  const auto pts = w::scaled_limit_check({3, -0.5}, 0.0, grid);
  for (const auto& pt : pts) EXPECT_GT(pt.scaled_value, 0.0);
  EXPECT_GT(pts[0].deviation, pts[1].deviation);
  EXPECT_GT(pts[1].deviation, pts[2].deviation);
  EXPECT_THROW(w::scaled_limit_check({3, -0.5}, 0.0, std::vector<double>{0.51}),
               DivergenceError);
}

TEST(Theorem2KernelLimit, LimitsAndDomain) {
  EXPECT_NEAR(w::theorem2_kernel_limit(1.0, 0.0, 100.0), std::exp(-1e-4), 1e-13);
  EXPECT_NEAR(w::theorem2_kernel_limit(9.0, 0.0, 1e6) * 9.0, 1.0, 1e-9);
  EXPECT_NEAR(w::theorem2_kernel_limit(1.0, 0.5, 1e-3), 0.0, 1e-300);
  EXPECT_THROW(w::theorem2_kernel_limit(0.0, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(w::theorem2_kernel_limit(-1.0, 0.0, 1.0), std::domain_error);
}

TEST(PsiSpec, FamilyAndTable) {
  const auto psi = w::PsiSpec::c_over_sqrt_loglog(0.9);
  EXPECT_DOUBLE_EQ(psi.eval(1.0), 0.9);   // loglog plateau
  EXPECT_DOUBLE_EQ(psi.eval(15.0), 0.9);
  EXPECT_NEAR(psi.eval(1e6), 0.9 / std::sqrt(w::guarded_loglog(1e6)), 1e-15);
  EXPECT_THROW(w::PsiSpec::c_over_sqrt_loglog(0.0), std::invalid_argument);

  const auto table = w::PsiSpec::tabulated({{1.0, 2.0}, {100.0, 1.5}, {1000.0, 1.0}});
  EXPECT_DOUBLE_EQ(table.eval(50.0), 2.0);
  EXPECT_DOUBLE_EQ(table.eval(100.0), 1.5);
  EXPECT_DOUBLE_EQ(table.eval(5000.0), 1.0);
  EXPECT_THROW(w::PsiSpec::tabulated({}), std::invalid_argument);
  EXPECT_THROW(w::PsiSpec::tabulated({{5.0, 1.0}, {2.0, 1.0}}), std::invalid_argument);
}

TEST(JPartialSums, HarmonicAndConvergentBehavior) {
  // psi == 10: terms e^-0.01 / n, divergent harmonic growth
  const auto big = w::PsiSpec::tabulated({{1.0, 10.0}});
  const auto r = w::j_ab_partial(big, {0, 0}, 10000);
  const double harmonic = std::log(1e4) + 0.5772156649;
  EXPECT_NEAR(r.partial_sum, std::exp(-0.01) * harmonic, 0.02);

  // psi_c with c = 1, (a,b) = (0,0): terms 1/(n log n), partial ~ loglog n
  const auto c1 = w::PsiSpec::c_over_sqrt_loglog(1.0);
  const double p4 = w::j_ab_partial(c1, {0, 0}, 10000).partial_sum;
  const double p6 = w::j_ab_partial(c1, {0, 0}, 1000000).partial_sum;
  EXPECT_NEAR(p6 - p4, w::guarded_loglog(1e6) - w::guarded_loglog(1e4), 0.02);

  // convergent case: dyadic increments shrink
  const auto c09 = w::PsiSpec::c_over_sqrt_loglog(0.9);
  const double q4 = w::j_ab_partial(c09, {0, 0}, 10000).partial_sum;
  const double q5 = w::j_ab_partial(c09, {0, 0}, 100000).partial_sum;
  const double q6 = w::j_ab_partial(c09, {0, 0}, 1000000).partial_sum;
  EXPECT_LT((q6 - q5) / (q5 - q4), 0.95);
}

TEST(JPartialSums, ChungWeighting) {
  // psi == 1: terms e^-1 / n
  const auto one = w::PsiSpec::tabulated({{1.0, 1.0}});
  const auto r = w::j_chung_partial(one, 10000);
  const double harmonic = std::log(1e4) + 0.5772156649;
  EXPECT_NEAR(r.partial_sum, std::exp(-1.0) * harmonic, 0.02);

  // c = 0.9 converges, c = 1.1 diverges: compare increment decay
  const auto c09 = w::PsiSpec::c_over_sqrt_loglog(0.9);
  const double q5 = w::j_chung_partial(c09, 100000).partial_sum;
  const double q6 = w::j_chung_partial(c09, 1000000).partial_sum;
  const double q7 = w::j_chung_partial(c09, 10000000).partial_sum;
  EXPECT_LT((q7 - q6) / (q6 - q5), 0.95);
}

TEST(JPartialSums, Errors) {
  EXPECT_THROW(w::j_ab_partial(w::PsiSpec::tabulated({{1.0, 0.0}}), {0, 0}, 100),
               std::domain_error);
  // a late increase violates "eventually non-increasing" over the range
  const auto bad = w::PsiSpec::tabulated({{1.0, 1.0}, {50.0, 2.0}});
  EXPECT_THROW(w::j_ab_partial(bad, {0, 0}, 100), std::invalid_argument);
  EXPECT_THROW(w::j_ab_partial(w::PsiSpec::c_over_sqrt_loglog(1.0), {-1.0, 0}, 100),
               std::domain_error);
}

TEST(JPartialSums, Cancellation) {
  w::CancelToken token;
  token.request_stop();
  EXPECT_THROW(w::j_ab_partial(w::PsiSpec::c_over_sqrt_loglog(0.9), {0, 0}, 10000000, &token),
               CancelledError);
  EXPECT_THROW(w::kernel_sum_direct({0, 0}, 0.5, 10000000, &token), CancelledError);

  // cancelling from another thread stops a long sum
  w::CancelToken late;
  std::thread stopper([&] { late.request_stop(); });
  stopper.join();
  EXPECT_THROW(w::j_chung_partial(w::PsiSpec::c_over_sqrt_loglog(1.0), 100000000, &late),
               CancelledError);
}

TEST(ClassifyPsiFamily, MatchesAnalyticRule) {
  for (const double a : {0.0, 1.0, 3.0}) {
    const double critical = 1.0 / std::sqrt(1.0 + a);
    for (const double c : {0.7, 0.9, 0.99, 1.0, 1.01, 1.1, 1.5}) {
      const auto verdict = w::classify_psi_family(c, {a, 0.0});
      const auto expected = c < critical ? w::SeriesVerdict::kConverges
                                         : w::SeriesVerdict::kDiverges;
      EXPECT_EQ(verdict, expected) << "c = " << c << ", a = " << a;
    }
    // boundary diverges exactly
    EXPECT_EQ(w::classify_psi_family(critical, {a, 0.5}), w::SeriesVerdict::kDiverges);
  }
  EXPECT_THROW(w::classify_psi_family(0.0, {0, 0}), std::invalid_argument);
}

TEST(EpsilonSchedule, Forms) {
  const auto zero = w::EpsilonSchedule::zero();
  EXPECT_DOUBLE_EQ(zero.offset(1e6), 0.0);
  const auto tau = w::EpsilonSchedule::constant_tau(0.5);
  EXPECT_NEAR(tau.offset(1e6) * w::guarded_loglog(1e6), 0.5, 1e-15);
  EXPECT_NEAR(tau.offset(10.0), 0.5, 1e-15);  // plateau: loglog = 1
}
