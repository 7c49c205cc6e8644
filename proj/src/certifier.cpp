#include "bagcert/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "bagcert/bounds.hpp"
#include "bagcert/errors.hpp"
#include "text_util.hpp"

namespace bagcert {

std::string_view to_string(AttackModel attack) {
  switch (attack) {
    case AttackModel::General: return "general";
    case AttackModel::Modify: return "modify";
    case AttackModel::Delete: return "delete";
    case AttackModel::Insert: return "insert";
  }
  return "unknown";
}

CertInputs CertInputs::from_doubles(std::uint64_t n, std::uint64_t k, double p_lower, double p_upper_runner) {
  CertInputs in{n, k, to_rational(p_lower), to_rational(p_upper_runner)};
  in.validate();
  return in;
}

void CertInputs::validate() const {
  if (n == 0 || k == 0) throw ValidationError("certification needs n >= 1 and k >= 1");
  if (p_upper_runner < 0 || p_lower > 1) throw ValidationError("probability bounds must lie in [0, 1]");
  if (!(p_lower > p_upper_runner)) {
    throw ValidationError("certification needs p_lower > p_upper_runner (abstained example)");
  }
  if (canonical(p_lower) + canonical(p_upper_runner) > 1) {
    throw ValidationError("p_lower + p_upper_runner must not exceed 1");
  }
}

Residuals residuals(const Rational& p_lower_in, const Rational& p_upper_in, std::uint64_t n, std::uint64_t k) {
  const Rational p_lower = canonical(p_lower_in);
  const Rational p_upper_runner = canonical(p_upper_in);
  const BigInt nk = ipow(n, k);
  const Rational grid_lower = ratio(floor_of(p_lower * nk), nk);
  const Rational grid_upper = ratio(ceil_of(p_upper_runner * nk), nk);
  Residuals out{p_lower - grid_lower, grid_upper - p_upper_runner};
  out.delta_l.canonicalize();
  out.delta_s.canonicalize();
  return out;
}

Rational adjusted_gap(const CertInputs& inputs) {
  const auto res = residuals(inputs.p_lower, inputs.p_upper_runner, inputs.n, inputs.k);
  Rational gap = canonical(inputs.p_lower) - canonical(inputs.p_upper_runner) - res.delta_l - res.delta_s;
  gap.canonicalize();
  return gap;
}

namespace {

// 1 - 2^(-1/(k-1)) for k >= 2.
long double lower_threshold_factor(std::uint64_t k) {
  return -std::expm1(-std::log(2.0L) / static_cast<long double>(k - 1));
}

// 2^(1/(k-1)) - 1 for k >= 2.
long double upper_threshold_factor(std::uint64_t k) {
  return std::expm1(std::log(2.0L) / static_cast<long double>(k - 1));
}

struct Candidates {
  std::vector<std::uint64_t> values;
  bool clamped = false;
};

Candidates nprime_candidates(std::uint64_t n, std::uint64_t k, std::uint64_t r) {
  Candidates out;
  if (k == 1) {
    out.values = {n};
    if (r > 0) out.values.push_back(n + r);
    return out;
  }
  const long double nl = static_cast<long double>(n);
  const long double rl = static_cast<long double>(r);
  if (rl <= nl * lower_threshold_factor(k)) {
    out.values = {n};
  } else if (rl >= nl * upper_threshold_factor(k)) {
    out.values = {n + r};
  } else {
    const long double x_root = rl / lower_threshold_factor(k);
    for (long double v : {std::ceil(x_root), std::floor(x_root)}) {
      std::uint64_t cand;
      if (v < nl) {
        cand = n;
        out.clamped = true;
      } else if (v > nl + rl) {
        cand = n + r;
        out.clamped = true;
      } else {
        cand = static_cast<std::uint64_t>(v);
      }
      if (std::find(out.values.begin(), out.values.end(), cand) == out.values.end()) out.values.push_back(cand);
    }
  }
  return out;
}

}  // namespace

ConstraintEval evaluate_constraint(std::uint64_t n, std::uint64_t k, std::uint64_t r, std::uint64_t n_prime,
                                   const Rational& adjusted_gap) {
  if (n_prime + r < n || n_prime > n + r) {
    throw DomainError("n' = " + std::to_string(n_prime) + " outside [n - r, n + r]");
  }
  const std::uint64_t larger = std::max(n, n_prime);
  if (larger < r) throw DomainError("max(n, n') - r is negative");
  const std::uint64_t m = larger - r;

  const BigInt nk = ipow(n, k);
  const BigInt npk = ipow(n_prime, k);
  ConstraintEval out;
  out.gamma = Rational(npk, nk);
  out.gamma.canonicalize();
  out.value = Rational(npk - 2 * ipow(m, k) + nk, nk);
  out.value.canonicalize();
  out.value -= adjusted_gap;
  out.x_root = k >= 2 ? static_cast<double>(static_cast<long double>(r) / lower_threshold_factor(k))
                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

Rational constraint_lhs(std::uint64_t n, std::uint64_t k, std::uint64_t r, std::uint64_t n_prime,
                        const Rational& adjusted_gap) {
  return evaluate_constraint(n, k, r, n_prime, adjusted_gap).value;
}

std::vector<std::uint64_t> argmax_nprime(std::uint64_t n, std::uint64_t k, std::uint64_t r) {
  return nprime_candidates(n, k, r).values;
}

Rational max_constraint(std::uint64_t n, std::uint64_t k, std::uint64_t r, const Rational& adjusted_gap) {
  auto cands = nprime_candidates(n, k, r);
  if (cands.clamped) {
    for (std::uint64_t end : {n, n + r}) {
      if (std::find(cands.values.begin(), cands.values.end(), end) == cands.values.end()) {
        cands.values.push_back(end);
      }
    }
  }
  std::optional<Rational> best;
  for (auto np : cands.values) {
    Rational v = constraint_lhs(n, k, r, np, adjusted_gap);
    if (!best || v > *best) best = std::move(v);
  }
  return *best;
}

std::uint64_t certified_size(const CertInputs& inputs, AttackModel attack) {
  inputs.validate();
  const std::uint64_t n = inputs.n;
  const std::uint64_t k = inputs.k;
  const Rational gap = adjusted_gap(inputs);

  auto certified_at = [&](std::uint64_t r) {
    switch (attack) {
      case AttackModel::General: return max_constraint(n, k, r, gap) < 0;
      case AttackModel::Modify: return constraint_lhs(n, k, r, n, gap) < 0;
      case AttackModel::Delete: return constraint_lhs(n, k, r, n - r, gap) < 0;
      case AttackModel::Insert: return constraint_lhs(n, k, r, n + r, gap) < 0;
    }
    return false;
  };

  if (!certified_at(0)) return 0;
  // Invariant: certified_at(lo) holds and certified_at(hi) fails. r = n
  // always fails: every model's L at r = n is at least 1 - gap >= 0.
  std::uint64_t lo = 0;
  std::uint64_t hi = n;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (certified_at(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::uint64_t certified_size_general(const CertInputs& inputs) {
  return certified_size(inputs, AttackModel::General);
}

namespace {

// ceil(n * root_term - 1), clamped below at 0.
std::uint64_t closed_form(const CertInputs& inputs, long double root_term) {
  const long double v = std::ceil(static_cast<long double>(inputs.n) * root_term - 1.0L);
  return v <= 0 ? 0 : static_cast<std::uint64_t>(v);
}

long double gap_as_long_double(const CertInputs& inputs) {
  inputs.validate();
  const Rational gap = adjusted_gap(inputs);
  // Two-term split keeps long double precision (mpq_get_d only yields double).
  const double hi = gap.get_d();
  const Rational rest = gap - to_rational(hi);
  const long double g = static_cast<long double>(hi) + static_cast<long double>(rest.get_d());
  return std::max(g, 0.0L);
}

}  // namespace

std::uint64_t closed_form_modify(const CertInputs& inputs) {
  const long double g = gap_as_long_double(inputs);
  // 1 - (1 - g/2)^(1/k)
  return closed_form(inputs, -std::expm1(std::log1p(-g / 2) / static_cast<long double>(inputs.k)));
}

std::uint64_t closed_form_delete(const CertInputs& inputs) {
  const long double g = gap_as_long_double(inputs);
  // 1 - (1 - g)^(1/k)
  return closed_form(inputs, -std::expm1(std::log1p(-g) / static_cast<long double>(inputs.k)));
}

std::uint64_t closed_form_insert(const CertInputs& inputs) {
  const long double g = gap_as_long_double(inputs);
  // (1 + g)^(1/k) - 1
  return closed_form(inputs, std::expm1(std::log1p(g) / static_cast<long double>(inputs.k)));
}

std::vector<Certificate> certify_all(const VoteTable& votes, double alpha, std::span<const AttackModel> attacks) {
  votes.validate();
  if (votes.rows.empty()) return {};
  const double alpha_effective = bonferroni_alpha(alpha, votes.rows.size());
  std::vector<Certificate> out;
  out.reserve(votes.rows.size());
  for (const auto& row : votes.rows) {
    const auto bounds = simuem(row.counts, votes.num_classifiers, alpha_effective);
    Certificate cert;
    cert.id = row.id;
    cert.p_lower = bounds.p_lower;
    cert.p_upper_runner = bounds.p_upper_runner;
    if (!bounds.abstain) {
      cert.label = bounds.top;
      const auto inputs = CertInputs::from_doubles(votes.n, votes.k, bounds.p_lower, bounds.p_upper_runner);
      for (auto attack : attacks) cert.radius[static_cast<int>(attack)] = certified_size(inputs, attack);
    }
    out.push_back(cert);
  }
  return out;
}

double certified_accuracy(std::span<const Certificate> certs, std::span<const Label> truth, std::uint64_t r,
                          AttackModel attack) {
  if (certs.size() != truth.size()) {
    throw ValidationError("certificate count " + std::to_string(certs.size()) + " does not match truth count " +
                          std::to_string(truth.size()));
  }
  if (certs.empty()) throw ValidationError("certified accuracy needs at least one certificate");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& cert = certs[i];
    if (cert.abstain() || *cert.label != truth[i]) continue;
    const auto radius = cert.radius_for(attack);
    if (!radius) {
      throw ValidationError("certificate " + std::to_string(cert.id) + " has no radius for attack '" +
                            std::string(to_string(attack)) + "'");
    }
    if (*radius >= r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(certs.size());
}

namespace {

constexpr std::string_view kCertHeader =
    "id,predicted_label,abstain,p_lower,p_upper_runner,r_general,r_modify,r_delete,r_insert";
constexpr std::string_view kAbstain = "ABSTAIN";

std::uint64_t parse_uint(std::string_view field, std::size_t line, const char* what) {
  field = detail::trim(field);
  std::uint64_t v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(std::string(what) + " is not a non-negative integer: '" + std::string(field) + "'", line);
  }
  return v;
}

}  // namespace

void write_certificates(std::span<const Certificate> certs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << kCertHeader << '\n';
  for (const auto& cert : certs) {
    out << cert.id << ',';
    if (cert.abstain()) {
      out << kAbstain << ",1,";
    } else {
      out << *cert.label << ",0,";
    }
    out << detail::format_double(cert.p_lower) << ',' << detail::format_double(cert.p_upper_runner);
    for (auto attack : kAllAttackModels) {
      out << ',';
      if (cert.abstain()) {
        out << kAbstain;
      } else if (const auto radius = cert.radius_for(attack)) {
        out << *radius;
      }
    }
    out << '\n';
  }
}

std::vector<Certificate> read_certificates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<Certificate> out;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    if (!have_header) {
      if (line != kCertHeader) throw ParseError("unexpected certificates header", line_no);
      have_header = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 9) throw ParseError("expected 9 fields, got " + std::to_string(f.size()), line_no);
    Certificate cert;
    cert.id = parse_uint(f[0], line_no, "id");
    const bool abstain = parse_uint(f[2], line_no, "abstain") != 0;
    const auto pl = detail::parse_double(f[3]);
    const auto pu = detail::parse_double(f[4]);
    if (!pl || !pu) throw ParseError("probability bound is not a number", line_no);
    cert.p_lower = *pl;
    cert.p_upper_runner = *pu;
    if (abstain != (detail::trim(f[1]) == kAbstain)) {
      throw ParseError("abstain flag disagrees with predicted_label", line_no);
    }
    if (!abstain) {
      cert.label = static_cast<Label>(parse_uint(f[1], line_no, "predicted_label"));
      for (std::size_t a = 0; a < kAllAttackModels.size(); ++a) {
        const auto field = detail::trim(f[5 + a]);
        if (!field.empty()) cert.radius[a] = parse_uint(field, line_no, "radius");
      }
    }
    out.push_back(cert);
  }
  if (!have_header) throw ParseError("missing certificates header", line_no);
  return out;
}

}  // namespace bagcert
