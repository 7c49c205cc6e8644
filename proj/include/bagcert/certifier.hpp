#ifndef BAGCERT_CERTIFIER_HPP
#define BAGCERT_CERTIFIER_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bagcert/dataset.hpp"
#include "bagcert/ensemble.hpp"
#include "bagcert/exact.hpp"

namespace bagcert {

/// Poisoning threat models. General allows any mix of modifications,
/// deletions and insertions; the others restrict the attacker to one edit
/// type, which pins the poisoned dataset size n' to n, n - r or n + r.
enum class AttackModel { General = 0, Modify = 1, Delete = 2, Insert = 3 };

inline constexpr std::array<AttackModel, 4> kAllAttackModels = {AttackModel::General, AttackModel::Modify,
                                                                 AttackModel::Delete, AttackModel::Insert};

std::string_view to_string(AttackModel attack);

/// Certification problem for one test example. Probabilities are exact
/// rationals; doubles are converted with their exact binary value.
struct CertInputs {
  std::uint64_t n = 0;  // |D|
  std::uint64_t k = 0;  // subsample size
  Rational p_lower;
  Rational p_upper_runner;

  static CertInputs from_doubles(std::uint64_t n, std::uint64_t k, double p_lower, double p_upper_runner);

  // n, k >= 1; 0 <= p_upper < p_lower <= 1; p_lower + p_upper <= 1.
  void validate() const;
};

/// Rounding gaps that align the bounds to the 1/n^k grid of subsample
/// probabilities. Both lie in [0, 1/n^k).
struct Residuals {
  Rational delta_l;
  Rational delta_s;
};

Residuals residuals(const Rational& p_lower, const Rational& p_upper_runner, std::uint64_t n, std::uint64_t k);

/// p_lower - p_upper - delta_l - delta_s. Always an integer multiple of 1/n^k.
Rational adjusted_gap(const CertInputs& inputs);

struct ConstraintEval {
  Rational value;  // L(n')
  Rational gamma;  // (n'/n)^k
  double x_root;   // r / (1 - 2^(-1/(k-1))); NaN for k = 1
};

/// L(n') = (n'/n)^k - 2((max(n, n') - r)/n)^k + 1 - gap.
/// Throws DomainError unless n - r <= n' <= n + r and max(n, n') >= r.
ConstraintEval evaluate_constraint(std::uint64_t n, std::uint64_t k, std::uint64_t r, std::uint64_t n_prime,
                                   const Rational& adjusted_gap);
Rational constraint_lhs(std::uint64_t n, std::uint64_t k, std::uint64_t r, std::uint64_t n_prime,
                        const Rational& adjusted_gap);

/// Candidate maximizers of L over n' in [n - r, n + r]: {n} below the
/// lower threshold n(1 - 2^(-1/(k-1))), {n + r} above n(2^(1/(k-1)) - 1),
/// otherwise the floor and ceiling of x_root clamped to [n, n + r].
/// For k = 1 both endpoints {n, n + r} are returned.
std::vector<std::uint64_t> argmax_nprime(std::uint64_t n, std::uint64_t k, std::uint64_t r);

/// max over n - r <= n' <= n + r of L(n'), from at most four evaluations.
Rational max_constraint(std::uint64_t n, std::uint64_t k, std::uint64_t r, const Rational& adjusted_gap);

/// Largest r in [0, n] whose constraint is strictly negative (0 if none).
/// The constraint is monotone in r, so this is a binary search; for the
/// restricted models n' is fixed instead of maximized over.
std::uint64_t certified_size(const CertInputs& inputs, AttackModel attack);
std::uint64_t certified_size_general(const CertInputs& inputs);

// Closed forms for the single-edit attackers, clamped below at 0.
std::uint64_t closed_form_modify(const CertInputs& inputs);
std::uint64_t closed_form_delete(const CertInputs& inputs);
std::uint64_t closed_form_insert(const CertInputs& inputs);

struct Certificate {
  std::size_t id = 0;
  std::optional<Label> label;  // nullopt = ABSTAIN
  double p_lower = 0;
  double p_upper_runner = 0;
  std::array<std::optional<std::uint64_t>, 4> radius;  // indexed by AttackModel

  bool abstain() const noexcept { return !label.has_value(); }
  std::optional<std::uint64_t> radius_for(AttackModel attack) const { return radius[static_cast<int>(attack)]; }

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

/// Bounds every row at level alpha / e (e = number of rows) and certifies
/// the requested attack models. With probability at least 1 - alpha, every
/// non-abstaining certificate is correct simultaneously.
std::vector<Certificate> certify_all(const VoteTable& votes, double alpha, std::span<const AttackModel> attacks);

/// CA_r: fraction of certificates with label == truth and radius >= r.
/// Abstentions count as incorrect.
double certified_accuracy(std::span<const Certificate> certs, std::span<const Label> truth, std::uint64_t r,
                          AttackModel attack = AttackModel::General);

// Certificates CSV:
// id,predicted_label,abstain,p_lower,p_upper_runner,r_general,r_modify,r_delete,r_insert
void write_certificates(std::span<const Certificate> certs, const std::filesystem::path& path);
std::vector<Certificate> read_certificates(const std::filesystem::path& path);

}  // namespace bagcert

#endif  // BAGCERT_CERTIFIER_HPP
