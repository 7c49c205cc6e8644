#include "bagcert/exact.hpp"

#include <cmath>

#include "bagcert/errors.hpp"

namespace bagcert {

Rational to_rational(double value) {
  if (!std::isfinite(value)) throw DomainError("cannot convert a non-finite double to a rational");
  Rational q(value);  // mpq_set_d is exact
  q.canonicalize();
  return q;
}

Rational ratio(const BigInt& num, const BigInt& den) {
  if (den == 0) throw DomainError("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational canonical(Rational q) {
  q.canonicalize();
  return q;
}

BigInt ipow(std::uint64_t base, std::uint64_t exponent) {
  BigInt b(static_cast<unsigned long>(base));
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), b.get_mpz_t(), static_cast<unsigned long>(exponent));
  return out;
}

BigInt floor_of(const Rational& q) {
  BigInt out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

BigInt ceil_of(const Rational& q) {
  BigInt out;
  mpz_cdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

double to_double(const Rational& q) { return q.get_d(); }

std::string to_string(const Rational& q) { return q.get_str(); }

}  // namespace bagcert
