#ifndef BAGCERT_ORACLE_HPP
#define BAGCERT_ORACLE_HPP

// Exhaustive verification at toy scale. Every probability here is an exact
// rational obtained by enumerating all ordered k-tuples of a dataset, so
// the checks do not depend on Monte Carlo estimates.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bagcert/dataset.hpp"
#include "bagcert/exact.hpp"
#include "bagcert/learners.hpp"

namespace bagcert {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

struct ExactDistribution {
  std::vector<Rational> p;  // one entry per label, sums to 1

  Label argmax() const;        // smallest index on ties
  bool top_is_unique() const;  // no other label reaches the maximum
};

/// p_j = Pr(A(g(D), x) = j) by enumerating all n^k ordered subsamples.
/// Throws BudgetExceeded when n^k > budget and ValidationError for a
/// randomized learner (one with a learner seed).
ExactDistribution exact_label_probabilities(const Dataset& dataset, const BaseLearnerSpec& spec, std::uint64_t k,
                                            std::span<const double> x,
                                            std::uint64_t budget = kDefaultEnumerationBudget);

Label exact_ensemble_prediction(const Dataset& dataset, const BaseLearnerSpec& spec, std::uint64_t k,
                                std::span<const double> x, std::uint64_t budget = kDefaultEnumerationBudget);

enum class TiePolicy {
  SmallestLabel,  // a tied subsample counts for label 0 (the majority learner's rule)
  Discard,        // a tied subsample counts for neither label
};

/// Closed-form label probability of the majority-label learner for c = 2:
/// a binomial sum over how many of the k draws carry `label`.
Rational binomial_reference(const Dataset& dataset, std::uint64_t k, Label label, TiePolicy ties);

/// Finite example space: every feature vector in {0,1}^dimension paired
/// with every label in [0, num_classes).
struct Universe {
  std::size_t dimension = 1;
  std::size_t num_classes = 2;

  std::vector<Example> elements() const;
};

/// Multiset edit distance max(|D|, |D'|) - |D ∩ D'|.
std::uint64_t poisoning_distance(std::span<const std::uint64_t> counts, std::span<const std::uint64_t> other);

struct SoundnessReport {
  Label expected = 0;  // exact ensemble prediction on D
  std::uint64_t radius = 0;
  std::uint64_t datasets_checked = 0;
  std::uint64_t violations = 0;
  std::optional<Dataset> counterexample;  // first violating D'

  bool sound() const noexcept { return violations == 0; }
};

/// Enumerates every D' over `universe` within poisoning distance r of D
/// (multisets, n' >= 1) and checks that the exact ensemble prediction is
/// still the label predicted on D, with no ties. `budget` caps the total
/// number of enumerated subsamples.
SoundnessReport verify_soundness(const Dataset& dataset, const BaseLearnerSpec& spec, std::uint64_t k,
                                 std::span<const double> x, std::uint64_t r, const Universe& universe,
                                 std::uint64_t budget = kDefaultEnumerationBudget);

enum class Region : std::uint8_t { B, C, E };

/// The subsample space shared by X = g(D) and Y = g(D'), with |D| = n,
/// |D'| = n' and |D ∩ D'| = m. Elements are ids: D = [0, n),
/// I = [0, m), D' = I ∪ [n, n + n' - m). Tuples are in lexicographic order.
///   B: tuples inside D but not inside I
///   C: tuples inside D' but not inside I
///   E: tuples inside I
struct RegionPartition {
  std::uint64_t n = 0;
  std::uint64_t n_prime = 0;
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  std::vector<std::vector<std::uint32_t>> tuples;
  std::vector<Region> region;

  std::uint64_t count(Region r) const;
  Rational x_mass(Region r) const;  // count / n^k for B and E, 0 for C
  Rational y_mass(Region r) const;  // count / n'^k for C and E, 0 for B
};

RegionPartition partition_subsample_space(std::uint64_t n, std::uint64_t n_prime, std::uint64_t m,
                                          std::uint64_t k, std::uint64_t budget = kDefaultEnumerationBudget);

/// Adversarial construction showing no radius beyond r* can be certified
/// without assumptions on the learner. Label l is 0 and s is 1.
struct TightnessWitness {
  bool found = false;
  std::string reason;  // why no witness exists, when !found

  std::uint64_t r = 0;
  std::uint64_t n_prime = 0;
  std::uint64_t m = 0;
  Rational constraint_value;  // L(n') >= 0 at the chosen n'

  std::uint64_t region_b = 0, region_c = 0, region_e = 0;
  std::uint64_t region_r = 0;         // |R| = |B ∪ B'| (X-support tuples labelled l)
  std::uint64_t region_c_prime = 0;   // |C'_s|

  // A* under X: must reproduce the bounds exactly.
  Rational x_prob_l, x_prob_s, x_prob_other_max;
  // A* under Y.
  Rational y_prob_l, y_prob_s;
  // (p_lower - (1 - (m/n)^k)) / (n'/n)^k when R contains all of B.
  std::optional<Rational> analytic_y_prob_l;

  // found, A* consistent with the bounds, and Pr(A*(Y)=l) <= Pr(A*(Y)=s).
  bool verified(const Rational& p_lower, const Rational& p_upper) const;
};

/// Requires p_lower > p_upper, p_lower + p_upper <= 1,
/// p_lower + (c-1) p_upper >= 1, and both bounds multiples of 1/n^k
/// (ValidationError otherwise). Picks the n' in [max(1, n-r), n+r] with the
/// largest L(n'); when L(n') < 0 for all of them no witness exists.
TightnessWitness tightness_witness(std::uint64_t n, std::uint64_t k, std::size_t c, const Rational& p_lower,
                                   const Rational& p_upper, std::uint64_t r,
                                   std::uint64_t budget = kDefaultEnumerationBudget);

struct OracleSuiteConfig {
  std::uint64_t budget = kDefaultEnumerationBudget;
  std::size_t max_n = 6;
  std::size_t max_k = 3;
  Universe universe{};
  std::vector<LearnerKind> learners = {LearnerKind::MajorityLabel};
  // Radius actually checked is r* + radius_offset (mutation testing).
  std::int64_t radius_offset = 0;
  std::size_t tightness_max_n = 5;
  std::size_t tightness_max_k = 3;
};

struct SoundnessCase {
  std::vector<Example> dataset;
  LearnerKind learner = LearnerKind::MajorityLabel;
  std::uint64_t k = 0;
  std::uint64_t r_star = 0;
  std::uint64_t checked_radius = 0;
  SoundnessReport report;
  // Outcome one step beyond r*: true when some D' at r* + 1 flips this
  // learner's prediction (tight for this learner), false when the learner
  // resists, nullopt when not evaluated.
  std::optional<bool> flipped_beyond;
};

struct TightnessCase {
  std::uint64_t n = 0, k = 0;
  std::size_t c = 0;
  Rational p_lower, p_upper;
  std::uint64_t r_star = 0;
  TightnessWitness witness;
  bool verified = false;
};

struct OracleSuiteReport {
  std::vector<SoundnessCase> soundness;
  std::vector<TightnessCase> tightness;
  std::uint64_t skipped_budget = 0;  // instances beyond the enumeration budget
  std::uint64_t skipped_ties = 0;    // datasets whose exact prediction is tied (certifier abstains)
  std::vector<std::string> warnings;

  std::uint64_t soundness_violations() const;
  std::uint64_t tightness_failures() const;
  bool passed() const { return soundness_violations() == 0 && tightness_failures() == 0; }

  std::string to_text() const;
  std::string to_json() const;  // failing instances are serialized in full
};

OracleSuiteReport run_oracle_suite(const OracleSuiteConfig& config);

}  // namespace bagcert

#endif  // BAGCERT_ORACLE_HPP
