#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bagcert/dataset.hpp"
#include "bagcert/ensemble.hpp"
#include "bagcert/errors.hpp"
#include "scratch_dir.hpp"

using namespace bagcert;

namespace {

Dataset three_zeros_two_ones() { return Dataset({{{0.0}, 0}, {{0.0}, 0}, {{0.0}, 0}, {{0.0}, 1}, {{0.0}, 1}}); }

BaseLearnerSpec majority() {
  BaseLearnerSpec s;
  s.kind = LearnerKind::MajorityLabel;
  return s;
}

Dataset blobs(std::size_t size, std::uint64_t seed) {
  BlobOptions o;
  o.size = size;
  o.seed = seed;
  return make_gaussian_blobs(o);
}

}  // namespace

TEST(Ensemble, SingleVoterMajority) {
  const Dataset train({{{0.0}, 0}, {{0.0}, 0}, {{0.0}, 0}}, 4);
  const Dataset test({{{1.0}, 0}, {{2.0}, 3}});
  const auto votes = train_votes(train, majority(), {3, 1, 9, 1}, test);
  ASSERT_EQ(votes.rows.size(), 2u);
  EXPECT_EQ(votes.num_classes, 4u);
  for (const auto& row : votes.rows) EXPECT_EQ(row.counts, (std::vector<std::uint64_t>{1, 0, 0, 0}));
}

TEST(Ensemble, CountsAreConserved) {
  const auto votes = train_votes(blobs(120, 1), {}, {7, 333, 2, 3}, blobs(40, 2));
  EXPECT_NO_THROW(votes.validate());
  for (std::size_t i = 0; i < votes.rows.size(); ++i) {
    EXPECT_EQ(votes.rows[i].id, i);
    EXPECT_EQ(std::accumulate(votes.rows[i].counts.begin(), votes.rows[i].counts.end(), std::uint64_t{0}), 333u);
  }
}

TEST(Ensemble, DeterministicAcrossRunsAndThreadCounts) {
  const Dataset train = blobs(150, 3), test = blobs(30, 4);
  const auto a = train_votes(train, {}, {10, 257, 99, 1}, test);
  const auto b = train_votes(train, {}, {10, 257, 99, 1}, test);
  const auto c = train_votes(train, {}, {10, 257, 99, 7}, test);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(votes_to_json(a), votes_to_json(c));
  const auto other_seed = train_votes(train, {}, {10, 257, 100, 1}, test);
  EXPECT_NE(a, other_seed);
}

TEST(Ensemble, VoteFractionMatchesExactProbability) {
  // Exact enumeration of the 25 ordered pairs gives p_0 = 21/25.
  const Dataset test({{{0.0}, 0}});
  const std::uint64_t N = 100'000;
  const auto votes = train_votes(three_zeros_two_ones(), majority(), {2, N, 2024, 0}, test);
  const double p = 21.0 / 25.0;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(N));
  const double frac = static_cast<double>(votes.rows[0].counts[0]) / static_cast<double>(N);
  EXPECT_LT(std::abs(frac - p), 3 * sigma);
}

TEST(Ensemble, RejectsZeroSizes) {
  EXPECT_THROW(train_votes(blobs(10, 1), {}, {0, 10, 0, 1}, blobs(3, 2)), ValidationError);
  EXPECT_THROW(train_votes(blobs(10, 1), {}, {2, 0, 0, 1}, blobs(3, 2)), ValidationError);
}

TEST(Ensemble, DimensionMismatchPropagates) {
  const Dataset test({{{0.0, 1.0, 2.0}, 0}});
  EXPECT_THROW(train_votes(blobs(10, 1), {}, {2, 5, 0, 1}, test), ValidationError);
}

TEST(VotesJson, RoundTrip) {
  ScratchDir dir;
  const auto votes = train_votes(blobs(60, 5), {}, {4, 50, 17, 2}, blobs(9, 6));
  write_votes(votes, dir / "v.json");
  EXPECT_EQ(read_votes(dir / "v.json"), votes);
  const std::string text = read_text(dir / "v.json");
  for (const char* key : {"\"n\"", "\"k\"", "\"N\"", "\"c\"", "\"seed\"", "\"learner\"", "\"examples\"", "\"counts\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(VotesJson, SchemaViolations) {
  const std::string good =
      R"({"n":5,"k":2,"N":3,"c":2,"seed":1,"learner":"majority","examples":[{"id":0,"counts":[2,1]}]})";
  EXPECT_NO_THROW(votes_from_json(good));
  EXPECT_THROW(votes_from_json("{not json"), ValidationError);
  EXPECT_THROW(votes_from_json(R"({"n":5})"), ValidationError);
  EXPECT_THROW(
      votes_from_json(R"({"n":5,"k":2,"N":4,"c":2,"seed":1,"learner":"m","examples":[{"id":0,"counts":[2,1]}]})"),
      ValidationError);
  EXPECT_THROW(
      votes_from_json(R"({"n":5,"k":2,"N":3,"c":2,"seed":1,"learner":"m","examples":[{"id":0,"counts":[2,1,0]}]})"),
      ValidationError);
  EXPECT_THROW(
      votes_from_json(R"({"n":5,"k":2,"N":3,"c":2,"seed":1,"learner":"m","examples":[{"id":0,"counts":[-1,4]}]})"),
      ValidationError);
}
