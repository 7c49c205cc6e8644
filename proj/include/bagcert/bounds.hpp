#ifndef BAGCERT_BOUNDS_HPP
#define BAGCERT_BOUNDS_HPP

#include <cstdint>
#include <span>

#include "bagcert/dataset.hpp"

namespace bagcert {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0.
double regularized_incomplete_beta(double x, double a, double b);

/// Quantile of Beta(a, b): the x with I_x(a, b) = beta.
///
/// Degenerate shapes follow the point-mass convention: a = 0 gives 0 and
/// b = 0 gives 1. Throws DomainError when beta is outside (0, 1), a shape
/// is negative, or both shapes are 0.
double beta_quantile(double beta, double a, double b);

/// Simultaneous Clopper-Pearson bounds for one vote row.
struct ProbabilityBounds {
  Label top = 0;        // l: most votes, smallest index on ties
  Label runner_up = 0;  // s: largest upper bound among the other labels
  double p_lower = 0;
  double p_upper_runner = 0;
  double alpha_effective = 0;
  bool abstain = true;
};

/// Per-label level alpha_effective / c. The lower bound of the top label is
/// Beta(alpha/c; N_l, N - N_l + 1); every other label gets
/// Beta(1 - alpha/c; N_j, N - N_j + 1), or 1 - (alpha/c)^(1/N) when N_j = 0.
/// The runner-up bound is clamped to 1 - p_lower. Abstains when
/// p_lower <= p_upper_runner.
ProbabilityBounds simuem(std::span<const std::uint64_t> counts, std::uint64_t num_classifiers,
                         double alpha_effective);

// alpha / e. Throws DomainError for e = 0 or alpha outside (0, 1).
double bonferroni_alpha(double alpha, std::size_t e);

}  // namespace bagcert

#endif  // BAGCERT_BOUNDS_HPP
