#ifndef BAGCERT_EXACT_HPP
#define BAGCERT_EXACT_HPP

#include <cstdint>
#include <string>

#include <gmpxx.h>

namespace bagcert {

using BigInt = mpz_class;
using Rational = mpq_class;

// Exact value of a finite double. Throws DomainError on NaN/infinity.
Rational to_rational(double value);

BigInt ipow(std::uint64_t base, std::uint64_t exponent);

// num/den in lowest terms. gmpxx leaves two-argument construction
// unreduced, and mpq arithmetic requires reduced operands.
Rational ratio(const BigInt& num, const BigInt& den);
Rational canonical(Rational q);

BigInt floor_of(const Rational& q);
BigInt ceil_of(const Rational& q);

// Nearest double (round-to-nearest is not guaranteed; GMP truncates).
double to_double(const Rational& q);

std::string to_string(const Rational& q);

}  // namespace bagcert

#endif  // BAGCERT_EXACT_HPP
