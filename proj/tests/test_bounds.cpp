#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <tuple>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "bagcert/bounds.hpp"
#include "bagcert/errors.hpp"

using namespace bagcert;

namespace {

// Boost's inverse gives up on a few extreme tails (e.g. a=0.5, b=2,
// q=1e-12); bisect its forward CDF there instead.
double reference_quantile(double a, double b, double q) {
  try {
    return boost::math::ibeta_inv(a, b, q);
  } catch (const boost::math::evaluation_error&) {
    double lo = 0, hi = 1;
    for (int i = 0; i < 2000 && lo < hi; ++i) {
      const double mid = lo + (hi - lo) / 2;
      if (mid == lo || mid == hi) break;
      (boost::math::ibeta(a, b, mid) < q ? lo : hi) = mid;
    }
    return hi;
  }
}

}  // namespace

TEST(BetaQuantile, ClosedFormCases) {
  EXPECT_NEAR(beta_quantile(0.5, 1, 1), 0.5, 1e-12);
  const double upper = beta_quantile(0.001, 1000, 1);
  EXPECT_NEAR(upper, std::pow(0.001, 1.0 / 1000), 1e-12);
  EXPECT_NEAR(upper, 0.993116, 1e-6);
  EXPECT_NEAR(std::pow(upper, 1000), 0.001, 1e-10);
  const double lower = beta_quantile(0.999, 1, 1000);
  EXPECT_NEAR(lower, 1 - std::pow(0.001, 1.0 / 1000), 1e-12);
  EXPECT_NEAR(1 - std::pow(1 - lower, 1000), 0.999, 1e-10);
}

TEST(BetaQuantile, DegenerateShapes) {
  EXPECT_EQ(beta_quantile(0.3, 0, 5), 0.0);
  EXPECT_EQ(beta_quantile(0.3, 5, 0), 1.0);
  EXPECT_THROW(beta_quantile(0.3, 0, 0), DomainError);
  EXPECT_THROW(beta_quantile(0.0, 2, 2), DomainError);
  EXPECT_THROW(beta_quantile(1.0, 2, 2), DomainError);
  EXPECT_THROW(beta_quantile(0.5, -1, 2), DomainError);
  EXPECT_THROW(beta_quantile(NAN, 2, 2), DomainError);
}

TEST(BetaQuantile, FrozenReferenceValues) {
  // Computed offline with an independent statistics library.
  const std::array<std::tuple<double, double, double, double>, 6> cases{{
      {0.025, 5, 7, 0.16748809406370713},
      {0.975, 3.5, 40, 0.17654210947330168},
      {1e-6, 100, 2, 0.8469891250289234},
      {0.3, 0.5, 0.5, 0.2061073738537634},
      {0.999, 2, 2000, 0.004604918140003482},
      {1e-9, 1000, 1000, 0.43323463247756416},
  }};
  for (const auto& [q, a, b, want] : cases) EXPECT_NEAR(beta_quantile(q, a, b), want, 1e-10) << q << " " << a << " " << b;
}

TEST(BetaQuantile, AgreesWithBoostAndInvertsTheCdf) {
  const std::vector<double> shapes{0.5, 1, 2, 7.5, 30, 300, 1000, 10000};
  const std::vector<double> levels{1e-12, 1e-8, 5e-5, 0.01, 0.3, 0.5, 0.9, 0.9995, 1 - 1e-9};
  for (double a : shapes) {
    for (double b : shapes) {
      for (double q : levels) {
        const double x = beta_quantile(q, a, b);
        const double want = reference_quantile(a, b, q);
        EXPECT_NEAR(x, want, 1e-10) << "q=" << q << " a=" << a << " b=" << b;
        // Either the CDF matches, or q is bracketed by the neighbouring doubles
        // (the exact quantile sits closer to 0 or 1 than one ulp).
        const double cdf = boost::math::ibeta(a, b, x);
        const bool bracketed = boost::math::ibeta(a, b, std::nextafter(x, 0.0)) <= q + 1e-10 &&
                               boost::math::ibeta(a, b, std::nextafter(x, 1.0)) >= q - 1e-10;
        EXPECT_TRUE(std::abs(cdf - q) <= 1e-10 || bracketed) << "q=" << q << " a=" << a << " b=" << b;
      }
    }
  }
}

TEST(IncompleteBeta, AgreesWithBoost) {
  for (double a : {0.5, 1.0, 3.0, 50.0, 990.0}) {
    for (double b : {0.5, 1.0, 11.0, 400.0}) {
      for (double x : {0.0, 1e-6, 0.1, 0.5, 0.93, 0.999, 1.0}) {
        EXPECT_NEAR(regularized_incomplete_beta(x, a, b), boost::math::ibeta(a, b, x), 1e-12)
            << x << " " << a << " " << b;
      }
    }
  }
}

TEST(BetaQuantile, MonotoneInLevel) {
  double prev = 0;
  for (int i = 1; i < 200; ++i) {
    const double x = beta_quantile(i / 200.0, 990, 11);
    EXPECT_GE(x, prev);
    prev = x;
  }
}

TEST(Simuem, UnanimousVotes) {
  const std::uint64_t N = 1000;
  std::vector<std::uint64_t> counts(10, 0);
  counts[3] = N;
  const double a_eff = 1e-7;
  const auto b = simuem(counts, N, a_eff);
  EXPECT_FALSE(b.abstain);
  EXPECT_EQ(b.top, 3u);
  const double want = std::pow(a_eff / 10, 1.0 / N);
  EXPECT_NEAR(b.p_lower, want, 1e-12);
  EXPECT_NEAR(b.p_upper_runner, 1 - b.p_lower, 1e-15);
  EXPECT_DOUBLE_EQ(b.alpha_effective, a_eff);
}

TEST(Simuem, TiedVotesAbstain) {
  const std::vector<std::uint64_t> counts{500, 500};
  const auto b = simuem(counts, 1000, 0.001);
  EXPECT_TRUE(b.abstain);
  EXPECT_EQ(b.top, 0u);
}

TEST(Simuem, ClopperPearsonReference) {
  const std::vector<std::uint64_t> counts{990, 10};
  const auto b = simuem(counts, 1000, 0.001);
  const double level = 0.001 / 2;
  EXPECT_NEAR(b.p_lower, boost::math::ibeta_inv(990.0, 11.0, level), 1e-9);
  EXPECT_NEAR(b.p_lower, 0.9749365668583673, 1e-9);
  EXPECT_NEAR(b.p_upper_runner, boost::math::ibeta_inv(10.0, 991.0, 1 - level), 1e-9);
  EXPECT_NEAR(b.p_upper_runner, 0.023574568148431764, 1e-9);
  EXPECT_EQ(b.top, 0u);
  EXPECT_EQ(b.runner_up, 1u);
  EXPECT_FALSE(b.abstain);
}

TEST(Simuem, RunnerUpIsLargestUpperBound) {
  const std::vector<std::uint64_t> counts{10, 700, 40, 250};
  const auto b = simuem(counts, 1000, 0.01);
  EXPECT_EQ(b.top, 1u);
  EXPECT_EQ(b.runner_up, 3u);
  EXPECT_NEAR(b.p_upper_runner, boost::math::ibeta_inv(250.0, 751.0, 1 - 0.01 / 4), 1e-9);
}

TEST(Simuem, InputErrors) {
  const std::vector<std::uint64_t> counts{3, 3};
  EXPECT_THROW(simuem(counts, 7, 0.01), ValidationError);
  const std::vector<std::uint64_t> one{5};
  EXPECT_THROW(simuem(one, 5, 0.01), ValidationError);
}

TEST(Simuem, TighterWithLargerAlpha) {
  const std::vector<std::uint64_t> counts{800, 150, 50};
  const auto strict = simuem(counts, 1000, 1e-6);
  const auto loose = simuem(counts, 1000, 0.1);
  EXPECT_LT(strict.p_lower, loose.p_lower);
  EXPECT_GT(strict.p_upper_runner, loose.p_upper_runner);
}

TEST(Bonferroni, Division) {
  EXPECT_DOUBLE_EQ(bonferroni_alpha(0.001, 1), 0.001);
  EXPECT_DOUBLE_EQ(bonferroni_alpha(0.001, 10000), 1e-7);
  EXPECT_DOUBLE_EQ(bonferroni_alpha(0.05, 5), 0.01);
  EXPECT_THROW(bonferroni_alpha(0.05, 0), DomainError);
}
