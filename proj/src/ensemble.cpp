#include "bagcert/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bagcert/errors.hpp"

namespace bagcert {

void VoteTable::validate() const {
  if (n == 0 || k == 0 || num_classifiers == 0) throw ValidationError("votes: n, k and N must be at least 1");
  if (num_classes < 2) throw ValidationError("votes: need at least 2 classes");
  for (const auto& row : rows) {
    if (row.counts.size() != num_classes) {
      throw ValidationError("votes: example " + std::to_string(row.id) + " has " +
                            std::to_string(row.counts.size()) + " counts, expected c=" +
                            std::to_string(num_classes));
    }
    const auto total = std::accumulate(row.counts.begin(), row.counts.end(), std::uint64_t{0});
    if (total != num_classifiers) {
      throw ValidationError("votes: counts of example " + std::to_string(row.id) + " sum to " +
                            std::to_string(total) + ", expected N=" + std::to_string(num_classifiers));
    }
  }
}

VoteTable train_votes(const Dataset& train, const BaseLearnerSpec& spec, const TrainOptions& options,
                      const Dataset& test) {
  if (options.k == 0) throw ValidationError("k must be at least 1");
  if (options.num_classifiers == 0) throw ValidationError("N must be at least 1");
  if (test.dimension() != train.dimension()) {
    throw ValidationError("test dimension " + std::to_string(test.dimension()) +
                          " does not match training dimension " + std::to_string(train.dimension()));
  }
  spec.validate();

  const std::size_t c = std::max({train.num_classes(), test.num_classes(), std::size_t{2}});
  const std::size_t e = test.size();
  const std::uint64_t total = options.num_classifiers;
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, total));

  // Each worker owns a contiguous block of classifier indices and a private
  // tally; integer sums make the reduction order-independent.
  std::vector<std::vector<std::uint64_t>> tallies(threads, std::vector<std::uint64_t>(e * c, 0));
  std::vector<std::exception_ptr> failures(threads);
  auto work = [&](unsigned t) {
    try {
      const std::uint64_t begin = total * t / threads;
      const std::uint64_t end = total * (t + 1) / threads;
      auto& tally = tallies[t];
      for (std::uint64_t o = begin; o < end; ++o) {
        const auto sub = draw_subsample(train, options.k, split_seed(options.master_seed, o));
        const auto clf = fit(spec, train, sub);
        for (std::size_t i = 0; i < e; ++i) ++tally[i * c + clf.predict(test[i].features)];
      }
    } catch (...) {
      failures[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  VoteTable votes;
  votes.n = train.size();
  votes.k = options.k;
  votes.num_classifiers = total;
  votes.num_classes = c;
  votes.seed = options.master_seed;
  votes.learner = std::string(to_string(spec.kind));
  votes.rows.resize(e);
  for (std::size_t i = 0; i < e; ++i) {
    auto& row = votes.rows[i];
    row.id = i;
    row.counts.assign(c, 0);
    for (const auto& tally : tallies) {
      for (std::size_t j = 0; j < c; ++j) row.counts[j] += tally[i * c + j];
    }
  }
  return votes;
}

using nlohmann::json;

std::string votes_to_json(const VoteTable& votes) {
  json j;
  j["n"] = votes.n;
  j["k"] = votes.k;
  j["N"] = votes.num_classifiers;
  j["c"] = votes.num_classes;
  j["seed"] = votes.seed;
  j["learner"] = votes.learner;
  json rows = json::array();
  for (const auto& row : votes.rows) rows.push_back({{"id", row.id}, {"counts", row.counts}});
  j["examples"] = std::move(rows);
  return j.dump(1) + "\n";
}

namespace {

// nlohmann converts -1 or 2.5 to an unsigned type without complaint.
std::uint64_t natural(const json& value, const char* what) {
  if (!value.is_number_unsigned()) throw ValidationError(std::string("votes file: ") + what + " must be a non-negative integer");
  return value.get<std::uint64_t>();
}

}  // namespace

VoteTable votes_from_json(const std::string& text) {
  VoteTable votes;
  try {
    const json j = json::parse(text);
    votes.n = natural(j.at("n"), "n");
    votes.k = natural(j.at("k"), "k");
    votes.num_classifiers = natural(j.at("N"), "N");
    votes.num_classes = natural(j.at("c"), "c");
    votes.seed = natural(j.at("seed"), "seed");
    votes.learner = j.at("learner").get<std::string>();
    for (const auto& ex : j.at("examples")) {
      VoteRow row{natural(ex.at("id"), "id"), {}};
      for (const auto& c : ex.at("counts")) row.counts.push_back(natural(c, "counts"));
      votes.rows.push_back(std::move(row));
    }
  } catch (const json::exception& err) {
    throw ValidationError(std::string("votes file schema violation: ") + err.what());
  }
  votes.validate();
  return votes;
}

void write_votes(const VoteTable& votes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << votes_to_json(votes);
}

VoteTable read_votes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return votes_from_json(buf.str());
}

}  // namespace bagcert
