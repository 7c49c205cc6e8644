#ifndef BAGCERT_ENSEMBLE_HPP
#define BAGCERT_ENSEMBLE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bagcert/dataset.hpp"
#include "bagcert/learners.hpp"

namespace bagcert {

struct VoteRow {
  std::size_t id = 0;
  std::vector<std::uint64_t> counts;  // one entry per label

  friend bool operator==(const VoteRow&, const VoteRow&) = default;
};

/// Label counts of N base classifiers on each test example, plus the run
/// metadata the certifier needs (n, k, N, c).
struct VoteTable {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t num_classifiers = 0;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;
  std::string learner;
  std::vector<VoteRow> rows;

  // Every row has c counts summing to N; n, k, N >= 1; c >= 2.
  void validate() const;

  friend bool operator==(const VoteTable&, const VoteTable&) = default;
};

struct TrainOptions {
  std::size_t k = 30;
  std::uint64_t num_classifiers = 1000;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Trains N classifiers, the o-th on a subsample drawn with
/// split_seed(master_seed, o), and tallies their predictions on `test`.
/// The result does not depend on `threads`.
VoteTable train_votes(const Dataset& train, const BaseLearnerSpec& spec, const TrainOptions& options,
                      const Dataset& test);

std::string votes_to_json(const VoteTable& votes);
VoteTable votes_from_json(const std::string& text);
void write_votes(const VoteTable& votes, const std::filesystem::path& path);
VoteTable read_votes(const std::filesystem::path& path);

}  // namespace bagcert

#endif  // BAGCERT_ENSEMBLE_HPP
