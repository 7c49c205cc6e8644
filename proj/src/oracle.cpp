#include "bagcert/oracle.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "bagcert/certifier.hpp"
#include "bagcert/errors.hpp"

namespace bagcert {

namespace {

// base^exp if it does not exceed `limit`.
std::optional<std::uint64_t> bounded_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t limit) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && out > limit / base) return std::nullopt;
    out *= base;
  }
  if (out > limit) return std::nullopt;
  return out;
}

// Calls visit(tuple) for every tuple in [0, base)^k in lexicographic order.
void for_each_tuple(std::uint64_t base, std::uint64_t k, const std::function<void(std::span<const std::size_t>)>& visit) {
  std::vector<std::size_t> tuple(k, 0);
  while (true) {
    visit(tuple);
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      if (++tuple[pos] < base) break;
      tuple[pos] = 0;
      if (pos == 0) return;
    }
    if (k == 0) return;
  }
}

// Calls visit(counts) for every vector of `parts` non-negative integers summing to `total`.
void for_each_composition(std::size_t parts, std::uint64_t total,
                          const std::function<void(std::span<const std::uint64_t>)>& visit) {
  std::vector<std::uint64_t> counts(parts, 0);
  std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t left) {
    if (i + 1 == parts) {
      counts[i] = left;
      visit(counts);
      return;
    }
    for (std::uint64_t v = left + 1; v-- > 0;) {
      counts[i] = v;
      rec(i + 1, left - v);
    }
  };
  if (parts > 0) rec(0, total);
}

Dataset dataset_from_counts(std::span<const Example> elements, std::span<const std::uint64_t> counts,
                            std::size_t num_classes) {
  std::vector<Example> examples;
  for (std::size_t u = 0; u < elements.size(); ++u) {
    for (std::uint64_t i = 0; i < counts[u]; ++i) examples.push_back(elements[u]);
  }
  return Dataset(std::move(examples), num_classes);
}

}  // namespace

Label ExactDistribution::argmax() const {
  Label best = 0;
  for (Label j = 1; j < p.size(); ++j) {
    if (p[j] > p[best]) best = j;
  }
  return best;
}

bool ExactDistribution::top_is_unique() const {
  const Label best = argmax();
  for (Label j = 0; j < p.size(); ++j) {
    if (j != best && p[j] == p[best]) return false;
  }
  return true;
}

ExactDistribution exact_label_probabilities(const Dataset& dataset, const BaseLearnerSpec& spec, std::uint64_t k,
                                            std::span<const double> x, std::uint64_t budget) {
  if (spec.learner_seed) throw ValidationError("exact enumeration does not support randomized learners");
  if (k == 0) throw ValidationError("k must be at least 1");
  const std::uint64_t n = dataset.size();
  const auto total = bounded_pow(n, k, budget);
  if (!total) {
    throw BudgetExceeded("n^k = " + std::to_string(n) + "^" + std::to_string(k) + " exceeds the enumeration budget " +
                         std::to_string(budget));
  }
  std::vector<std::uint64_t> counts(dataset.num_classes(), 0);
  Subsample sub;
  for_each_tuple(n, k, [&](std::span<const std::size_t> tuple) {
    sub.indices.assign(tuple.begin(), tuple.end());
    ++counts[fit(spec, dataset, sub).predict(x)];
  });
  ExactDistribution out;
  for (auto cnt : counts) {
    Rational p(BigInt(static_cast<unsigned long>(cnt)), BigInt(static_cast<unsigned long>(*total)));
    p.canonicalize();
    out.p.push_back(p);
  }
  return out;
}

Label exact_ensemble_prediction(const Dataset& dataset, const BaseLearnerSpec& spec, std::uint64_t k,
                                std::span<const double> x, std::uint64_t budget) {
  return exact_label_probabilities(dataset, spec, k, x, budget).argmax();
}

Rational binomial_reference(const Dataset& dataset, std::uint64_t k, Label label, TiePolicy ties) {
  if (dataset.num_classes() != 2) throw ValidationError("binomial reference needs exactly 2 classes");
  if (label > 1) throw ValidationError("label must be 0 or 1");
  std::uint64_t hits = 0;
  for (const auto& ex : dataset.examples()) hits += ex.label == label;
  const Rational q = ratio(BigInt(static_cast<unsigned long>(hits)), BigInt(static_cast<unsigned long>(dataset.size())));
  const Rational rest = 1 - q;

  Rational total = 0;
  for (std::uint64_t j = 0; j <= k; ++j) {
    const std::uint64_t other = k - j;
    const bool wins = j > other || (j == other && ties == TiePolicy::SmallestLabel && label == 0);
    if (!wins) continue;
    BigInt binom;
    mpz_bin_uiui(binom.get_mpz_t(), k, j);
    Rational qj, rj;
    mpz_pow_ui(qj.get_num_mpz_t(), q.get_num_mpz_t(), j);
    mpz_pow_ui(qj.get_den_mpz_t(), q.get_den_mpz_t(), j);
    mpz_pow_ui(rj.get_num_mpz_t(), rest.get_num_mpz_t(), other);
    mpz_pow_ui(rj.get_den_mpz_t(), rest.get_den_mpz_t(), other);
    qj.canonicalize();
    rj.canonicalize();
    total += Rational(binom) * qj * rj;
  }
  total.canonicalize();
  return total;
}

std::vector<Example> Universe::elements() const {
  std::vector<Example> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << dimension); ++mask) {
    std::vector<double> features(dimension);
    for (std::size_t f = 0; f < dimension; ++f) features[f] = static_cast<double>((mask >> f) & 1U);
    for (Label l = 0; l < num_classes; ++l) out.push_back({features, l});
  }
  return out;
}

std::uint64_t poisoning_distance(std::span<const std::uint64_t> counts, std::span<const std::uint64_t> other) {
  std::uint64_t size_a = 0, size_b = 0, common = 0;
  for (std::size_t u = 0; u < counts.size(); ++u) {
    size_a += counts[u];
    size_b += other[u];
    common += std::min(counts[u], other[u]);
  }
  return std::max(size_a, size_b) - common;
}

SoundnessReport verify_soundness(const Dataset& dataset, const BaseLearnerSpec& spec, std::uint64_t k,
                                 std::span<const double> x, std::uint64_t r, const Universe& universe,
                                 std::uint64_t budget) {
  const auto elements = universe.elements();
  std::vector<std::uint64_t> base(elements.size(), 0);
  for (const auto& ex : dataset.examples()) {
    const auto it = std::find(elements.begin(), elements.end(), ex);
    if (it == elements.end()) throw ValidationError("dataset example lies outside the universe");
    ++base[static_cast<std::size_t>(it - elements.begin())];
  }
  const std::size_t c = std::max(dataset.num_classes(), universe.num_classes);
  const std::uint64_t n = dataset.size();

  SoundnessReport report;
  report.radius = r;
  std::uint64_t spent = 0;
  auto charge = [&](std::uint64_t size) {
    const auto cost = bounded_pow(size, k, budget);
    if (!cost || spent + *cost > budget) throw BudgetExceeded("soundness enumeration exceeds the budget");
    spent += *cost;
  };
  charge(n);
  report.expected = exact_ensemble_prediction(dataset, spec, k, x, budget);

  const std::uint64_t smallest = n > r ? n - r : 1;
  for (std::uint64_t size = smallest; size <= n + r; ++size) {
    for_each_composition(elements.size(), size, [&](std::span<const std::uint64_t> counts) {
      if (poisoning_distance(base, counts) > r) return;
      charge(size);
      const Dataset poisoned = dataset_from_counts(elements, counts, c);
      const auto dist = exact_label_probabilities(poisoned, spec, k, x, budget);
      ++report.datasets_checked;
      if (dist.argmax() != report.expected || !dist.top_is_unique()) {
        ++report.violations;
        if (!report.counterexample) report.counterexample = poisoned;
      }
    });
  }
  return report;
}

std::uint64_t RegionPartition::count(Region r) const {
  return static_cast<std::uint64_t>(std::count(region.begin(), region.end(), r));
}

Rational RegionPartition::x_mass(Region r) const {
  if (r == Region::C) return 0;
  Rational q(BigInt(static_cast<unsigned long>(count(r))), ipow(n, k));
  q.canonicalize();
  return q;
}

Rational RegionPartition::y_mass(Region r) const {
  if (r == Region::B) return 0;
  Rational q(BigInt(static_cast<unsigned long>(count(r))), ipow(n_prime, k));
  q.canonicalize();
  return q;
}

RegionPartition partition_subsample_space(std::uint64_t n, std::uint64_t n_prime, std::uint64_t m, std::uint64_t k,
                                          std::uint64_t budget) {
  if (m > std::min(n, n_prime)) throw ValidationError("intersection larger than either dataset");
  if (n == 0 || n_prime == 0 || k == 0) throw ValidationError("partition needs n, n', k >= 1");
  const std::uint64_t support = n + n_prime - m;
  if (!bounded_pow(support, k, budget)) throw BudgetExceeded("subsample space exceeds the enumeration budget");

  RegionPartition part{n, n_prime, m, k, {}, {}};
  for_each_tuple(support, k, [&](std::span<const std::size_t> tuple) {
    bool in_d = true, in_dp = true, in_i = true;
    for (auto id : tuple) {
      in_d = in_d && id < n;
      in_dp = in_dp && (id < m || id >= n);
      in_i = in_i && id < m;
    }
    std::optional<Region> reg;
    if (in_i) {
      reg = Region::E;
    } else if (in_d) {
      reg = Region::B;
    } else if (in_dp) {
      reg = Region::C;
    }
    if (!reg) return;
    part.tuples.emplace_back(tuple.begin(), tuple.end());
    part.region.push_back(*reg);
  });
  return part;
}

bool TightnessWitness::verified(const Rational& p_lower_in, const Rational& p_upper_in) const {
  if (!found) return false;
  const Rational p_lower = canonical(p_lower_in);
  const Rational p_upper = canonical(p_upper_in);
  if (x_prob_l != p_lower || x_prob_s != p_upper || x_prob_other_max > p_upper) return false;
  if (analytic_y_prob_l && *analytic_y_prob_l != y_prob_l) return false;
  return y_prob_l <= y_prob_s;
}

TightnessWitness tightness_witness(std::uint64_t n, std::uint64_t k, std::size_t c, const Rational& p_lower_in,
                                   const Rational& p_upper_in, std::uint64_t r, std::uint64_t budget) {
  const Rational p_lower = canonical(p_lower_in);
  const Rational p_upper = canonical(p_upper_in);
  if (n == 0 || k == 0 || c < 2) throw ValidationError("witness needs n, k >= 1 and c >= 2");
  if (!(p_lower > p_upper) || p_upper < 0 || p_lower > 1) throw ValidationError("need 0 <= p_upper < p_lower <= 1");
  if (p_lower + p_upper > 1) throw ValidationError("need p_lower + p_upper <= 1");
  if (p_lower + (static_cast<long>(c) - 1) * p_upper < 1) throw ValidationError("need p_lower + (c-1) p_upper >= 1");
  const BigInt nk = ipow(n, k);
  const Rational scaled_l = p_lower * nk;
  const Rational scaled_s = p_upper * nk;
  if (scaled_l.get_den() != 1 || scaled_s.get_den() != 1) {
    throw ValidationError("bounds must be integer multiples of 1/n^k");
  }

  TightnessWitness w;
  w.r = r;
  // Most violating poisoned size: largest n^k * L(n') with integer arithmetic.
  const BigInt gap_scaled = scaled_l.get_num() - scaled_s.get_num();
  std::optional<BigInt> best;
  for (std::uint64_t np = n > r ? n - r : 1; np <= n + r; ++np) {
    const std::uint64_t larger = std::max(n, np);
    if (larger < r) continue;
    const BigInt value = ipow(np, k) - 2 * ipow(larger - r, k) + nk - gap_scaled;
    if (!best || value > *best) {
      best = value;
      w.n_prime = np;
      w.m = larger - r;
    }
  }
  if (!best || *best < 0) {
    w.reason = "no poisoned size n' in [n-r, n+r] violates the certification constraint (r <= r*)";
    return w;
  }
  w.constraint_value = Rational(*best, nk);
  w.constraint_value.canonicalize();

  const auto part = partition_subsample_space(n, w.n_prime, w.m, k, budget);
  w.region_b = part.count(Region::B);
  w.region_c = part.count(Region::C);
  w.region_e = part.count(Region::E);

  constexpr Label kTop = 0;
  constexpr Label kRunner = 1;
  constexpr Label kUnset = static_cast<Label>(-1);
  std::vector<Label> assign(part.tuples.size(), kUnset);
  auto take = [&](Region from, Label label, std::uint64_t& remaining) {
    for (std::size_t i = 0; i < assign.size() && remaining > 0; ++i) {
      if (part.region[i] == from && assign[i] == kUnset) {
        assign[i] = label;
        --remaining;
      }
    }
  };
  // R = B ∪ B' with X-mass p_lower: B first, then E. C'_s draws from what
  // is left of E, then of B. C belongs to s.
  std::uint64_t need_l = scaled_l.get_num().get_ui();
  take(Region::B, kTop, need_l);
  take(Region::E, kTop, need_l);
  std::uint64_t need_s = scaled_s.get_num().get_ui();
  take(Region::E, kRunner, need_s);
  take(Region::B, kRunner, need_s);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (part.region[i] == Region::C) assign[i] = kRunner;
  }
  // Remaining X-support is split among the other labels, at most p_upper each.
  for (Label j = 2; j < c; ++j) {
    std::uint64_t cap = scaled_s.get_num().get_ui();
    take(Region::E, j, cap);
    take(Region::B, j, cap);
  }
  if (std::find(assign.begin(), assign.end(), kUnset) != assign.end()) {
    throw ValidationError("bounds leave probability mass that no label can absorb");
  }

  std::vector<std::uint64_t> x_counts(c, 0), y_counts(c, 0);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (part.region[i] != Region::C) ++x_counts[assign[i]];
    if (part.region[i] != Region::B) ++y_counts[assign[i]];
    if (assign[i] == kTop) ++w.region_r;
  }
  w.region_c_prime = 0;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] == kRunner && part.region[i] != Region::C) ++w.region_c_prime;
  }
  const BigInt npk = ipow(w.n_prime, k);
  auto frac = [](std::uint64_t num, const BigInt& den) {
    Rational q(BigInt(static_cast<unsigned long>(num)), den);
    q.canonicalize();
    return q;
  };
  w.x_prob_l = frac(x_counts[kTop], nk);
  w.x_prob_s = frac(x_counts[kRunner], nk);
  w.x_prob_other_max = 0;
  for (Label j = 2; j < c; ++j) w.x_prob_other_max = std::max(w.x_prob_other_max, frac(x_counts[j], nk));
  w.y_prob_l = frac(y_counts[kTop], npk);
  w.y_prob_s = frac(y_counts[kRunner], npk);

  if (scaled_l.get_num() >= BigInt(static_cast<unsigned long>(w.region_b))) {
    const Rational mass_b = 1 - ratio(ipow(w.m, k), nk);
    Rational gamma(npk, nk);
    gamma.canonicalize();
    Rational analytic = (p_lower - mass_b) / gamma;
    analytic.canonicalize();
    w.analytic_y_prob_l = analytic;
  }
  w.found = true;
  return w;
}

std::uint64_t OracleSuiteReport::soundness_violations() const {
  std::uint64_t total = 0;
  for (const auto& c : soundness) total += c.report.violations;
  return total;
}

std::uint64_t OracleSuiteReport::tightness_failures() const {
  return static_cast<std::uint64_t>(
      std::count_if(tightness.begin(), tightness.end(), [](const TightnessCase& t) { return !t.verified; }));
}

namespace {

nlohmann::json examples_json(std::span<const Example> examples) {
  auto arr = nlohmann::json::array();
  for (const auto& ex : examples) arr.push_back({{"label", ex.label}, {"features", ex.features}});
  return arr;
}

}  // namespace

std::string OracleSuiteReport::to_json() const {
  using nlohmann::json;
  json j;
  j["passed"] = passed();
  j["soundness_violations"] = soundness_violations();
  j["tightness_failures"] = tightness_failures();
  j["skipped_budget"] = skipped_budget;
  j["skipped_ties"] = skipped_ties;
  j["warnings"] = warnings;
  auto sound = json::array();
  for (const auto& c : soundness) {
    json item{{"learner", std::string(to_string(c.learner))},
              {"n", c.dataset.size()},
              {"k", c.k},
              {"r_star", c.r_star},
              {"checked_radius", c.checked_radius},
              {"datasets_checked", c.report.datasets_checked},
              {"violations", c.report.violations},
              {"dataset", examples_json(c.dataset)}};
    item["flipped_beyond"] = c.flipped_beyond ? json(*c.flipped_beyond) : json(nullptr);
    if (c.report.counterexample) item["counterexample"] = examples_json(c.report.counterexample->examples());
    sound.push_back(std::move(item));
  }
  j["soundness"] = std::move(sound);
  auto tight = json::array();
  for (const auto& t : tightness) {
    tight.push_back({{"n", t.n},
                     {"k", t.k},
                     {"c", t.c},
                     {"p_lower", to_string(t.p_lower)},
                     {"p_upper", to_string(t.p_upper)},
                     {"r_star", t.r_star},
                     {"r", t.witness.r},
                     {"found", t.witness.found},
                     {"n_prime", t.witness.n_prime},
                     {"m", t.witness.m},
                     {"y_prob_l", to_string(t.witness.y_prob_l)},
                     {"y_prob_s", to_string(t.witness.y_prob_s)},
                     {"verified", t.verified}});
  }
  j["tightness"] = std::move(tight);
  return j.dump(1) + "\n";
}

std::string OracleSuiteReport::to_text() const {
  std::ostringstream out;
  std::uint64_t flipped = 0, robust = 0;
  for (const auto& c : soundness) {
    if (c.flipped_beyond) (*c.flipped_beyond ? flipped : robust)++;
  }
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  out << "soundness: " << soundness.size() << " instances, " << soundness_violations() << " violations"
      << " (skipped: " << skipped_budget << " over budget, " << skipped_ties << " tied)\n";
  out << "  one step beyond r*: " << flipped << " flipped by some D', " << robust << " learner-robust\n";
  out << "tightness: " << tightness.size() << " configurations, " << tightness.size() - tightness_failures()
      << " witnesses verified\n";
  for (const auto& c : soundness) {
    if (c.report.violations == 0) continue;
    out << "  VIOLATION learner=" << to_string(c.learner) << " n=" << c.dataset.size() << " k=" << c.k
        << " r*=" << c.r_star << " checked=" << c.checked_radius << " labels=";
    for (const auto& ex : c.dataset) out << ex.label;
    out << '\n';
  }
  for (const auto& t : tightness) {
    if (t.verified) continue;
    out << "  WITNESS FAILED n=" << t.n << " k=" << t.k << " c=" << t.c << " p_lower=" << to_string(t.p_lower)
        << " p_upper=" << to_string(t.p_upper) << " r=" << t.witness.r << '\n';
  }
  out << "RESULT: " << (passed() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

namespace {

void run_soundness_grid(const OracleSuiteConfig& config, OracleSuiteReport& report) {
  const auto elements = config.universe.elements();
  const std::vector<double> x(config.universe.dimension, 0.0);
  for (auto kind : config.learners) {
    const BaseLearnerSpec spec{kind, 1.0, std::nullopt};
    for (std::size_t n = 1; n <= config.max_n; ++n) {
      for_each_composition(elements.size(), n, [&](std::span<const std::uint64_t> counts) {
        const Dataset data = dataset_from_counts(elements, counts, config.universe.num_classes);
        for (std::uint64_t k = 1; k <= config.max_k; ++k) {
          std::optional<ExactDistribution> dist;
          try {
            dist = exact_label_probabilities(data, spec, k, x, config.budget);
          } catch (const BudgetExceeded&) {
            ++report.skipped_budget;
            continue;
          }
          if (!dist->top_is_unique()) {
            ++report.skipped_ties;
            continue;
          }
          const Label top = dist->argmax();
          Rational runner = 0;
          for (Label j = 0; j < dist->p.size(); ++j) {
            if (j != top) runner = std::max(runner, dist->p[j]);
          }
          const CertInputs inputs{n, k, dist->p[top], runner};
          SoundnessCase item;
          item.dataset.assign(data.examples().begin(), data.examples().end());
          item.learner = kind;
          item.k = k;
          item.r_star = certified_size_general(inputs);
          const std::int64_t checked = static_cast<std::int64_t>(item.r_star) + config.radius_offset;
          item.checked_radius = static_cast<std::uint64_t>(std::max<std::int64_t>(checked, 0));
          try {
            item.report = verify_soundness(data, spec, k, x, item.checked_radius, config.universe, config.budget);
          } catch (const BudgetExceeded&) {
            ++report.skipped_budget;
            continue;
          }
          if (config.radius_offset == 0) {
            try {
              const auto beyond = verify_soundness(data, spec, k, x, item.r_star + 1, config.universe, config.budget);
              item.flipped_beyond = !beyond.sound();
            } catch (const BudgetExceeded&) {
            }
          }
          report.soundness.push_back(std::move(item));
        }
      });
    }
  }
}

void run_tightness_grid(const OracleSuiteConfig& config, OracleSuiteReport& report) {
  for (std::uint64_t n = 2; n <= config.tightness_max_n; ++n) {
    for (std::uint64_t k = 1; k <= config.tightness_max_k; ++k) {
      const auto nk = bounded_pow(n, k, config.budget);
      if (!nk) {
        ++report.skipped_budget;
        continue;
      }
      for (std::size_t c : {2, 3}) {
        std::vector<std::uint64_t> numerators{*nk, (3 * *nk + 3) / 4, *nk / 2 + 1};
        std::sort(numerators.begin(), numerators.end());
        numerators.erase(std::unique(numerators.begin(), numerators.end()), numerators.end());
        for (auto a : numerators) {
          const std::uint64_t rest = *nk - a;
          const std::uint64_t b = c == 2 ? rest : (rest + 1) / 2;
          if (b >= a) continue;
          TightnessCase item;
          item.n = n;
          item.k = k;
          item.c = c;
          item.p_lower = Rational(BigInt(static_cast<unsigned long>(a)), BigInt(static_cast<unsigned long>(*nk)));
          item.p_upper = Rational(BigInt(static_cast<unsigned long>(b)), BigInt(static_cast<unsigned long>(*nk)));
          item.p_lower.canonicalize();
          item.p_upper.canonicalize();
          item.r_star = certified_size_general(CertInputs{n, k, item.p_lower, item.p_upper});
          try {
            item.witness = tightness_witness(n, k, c, item.p_lower, item.p_upper, item.r_star + 1, config.budget);
          } catch (const BudgetExceeded&) {
            ++report.skipped_budget;
            continue;
          }
          item.verified = item.witness.verified(item.p_lower, item.p_upper);
          report.tightness.push_back(std::move(item));
        }
      }
    }
  }
}

}  // namespace

OracleSuiteReport run_oracle_suite(const OracleSuiteConfig& config) {
  OracleSuiteReport report;
  if (config.budget == 0) {
    report.warnings.push_back("enumeration budget is 0; no instances were checked");
    return report;
  }
  run_soundness_grid(config, report);
  run_tightness_grid(config, report);
  if (report.skipped_budget > 0) {
    report.warnings.push_back(std::to_string(report.skipped_budget) + " instances exceeded the enumeration budget");
  }
  return report;
}

}  // namespace bagcert
