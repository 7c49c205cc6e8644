#include "bagcert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bagcert/errors.hpp"

namespace bagcert {

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Continued fraction for I_x(a, b), modified Lentz. Converges quickly for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

double beta_density(double x, double a, double b) {
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs positive shapes");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(1.0 - x, b, a) / b;
}

namespace {

// x with I_x(a, b) = target, for target <= 1/2. Solving on the lower tail
// keeps the residual relative to a small target, so x is resolved even
// where the density is tiny.
double solve_lower_tail(double beta, double a, double b) {
  // Bisection on [lo, hi] accelerated by Newton steps; a Newton step that
  // leaves the bracket is replaced by the midpoint.
  double lo = 0.0;
  double hi = 1.0;
  double x = a / (a + b);
  for (int iter = 0; iter < 400; ++iter) {
    const double f = regularized_incomplete_beta(x, a, b) - beta;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(x, 1e-300)) break;
    const double density = beta_density(x, a, b);
    double next = (density > 0.0 && std::isfinite(density)) ? x - f / density : lo + 0.5 * (hi - lo);
    if (!(next > lo && next < hi)) next = lo + 0.5 * (hi - lo);
    if (next == x) break;
    x = next;
  }
  // Pick whichever bracket end best matches the target level.
  const double flo = std::fabs(regularized_incomplete_beta(lo, a, b) - beta);
  const double fhi = std::fabs(regularized_incomplete_beta(hi, a, b) - beta);
  const double fx = std::fabs(regularized_incomplete_beta(x, a, b) - beta);
  if (fx <= flo && fx <= fhi) return x;
  return flo <= fhi ? lo : hi;
}

}  // namespace

double beta_quantile(double beta, double a, double b) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta quantile level must lie in (0, 1)");
  if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("beta shapes must be non-negative");
  if (a == 0.0 && b == 0.0) throw DomainError("beta shapes cannot both be zero");
  if (a == 0.0) return 0.0;
  if (b == 0.0) return 1.0;
  // Closed forms: I_x(a, 1) = x^a and I_x(1, b) = 1 - (1 - x)^b.
  if (b == 1.0) return std::exp(std::log(beta) / a);
  if (a == 1.0) return -std::expm1(std::log1p(-beta) / b);
  // I_x(a, b) = 1 - I_{1-x}(b, a); 1 - beta is exact for beta >= 1/2.
  if (beta > 0.5) return 1.0 - solve_lower_tail(1.0 - beta, b, a);
  return solve_lower_tail(beta, a, b);
}

ProbabilityBounds simuem(std::span<const std::uint64_t> counts, std::uint64_t num_classifiers,
                         double alpha_effective) {
  const std::size_t c = counts.size();
  if (c < 2) throw ValidationError("simuem needs at least 2 labels");
  if (!(alpha_effective > 0.0 && alpha_effective < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total != num_classifiers || num_classifiers == 0) {
    throw ValidationError("vote counts sum to " + std::to_string(total) + ", expected N=" +
                          std::to_string(num_classifiers));
  }

  const double N = static_cast<double>(num_classifiers);
  const double level = alpha_effective / static_cast<double>(c);
  ProbabilityBounds out;
  out.alpha_effective = alpha_effective;
  out.top = static_cast<Label>(std::max_element(counts.begin(), counts.end()) - counts.begin());

  const double n_top = static_cast<double>(counts[out.top]);
  out.p_lower = beta_quantile(level, n_top, N - n_top + 1.0);

  const double zero_count_upper = -std::expm1(std::log(level) / N);
  double max_upper = -1.0;
  for (Label j = 0; j < c; ++j) {
    if (j == out.top) continue;
    const double nj = static_cast<double>(counts[j]);
    const double upper = counts[j] == 0 ? zero_count_upper : beta_quantile(1.0 - level, nj, N - nj + 1.0);
    if (upper > max_upper) {
      max_upper = upper;
      out.runner_up = j;
    }
  }
  out.p_upper_runner = std::min(max_upper, 1.0 - out.p_lower);
  out.abstain = !(out.p_lower > out.p_upper_runner);
  return out;
}

double bonferroni_alpha(double alpha, std::size_t e) {
  if (e == 0) throw DomainError("Bonferroni correction needs at least one test example");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  return alpha / static_cast<double>(e);
}

}  // namespace bagcert
