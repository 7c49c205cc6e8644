#ifndef BAGCERT_CLI_HPP
#define BAGCERT_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bagcert/certifier.hpp"
#include "bagcert/learners.hpp"
#include "bagcert/oracle.hpp"

namespace bagcert::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path dataset_labels;  // set => IDX pair
  std::filesystem::path test;
  std::filesystem::path test_labels;
  std::optional<std::size_t> num_classes;
  BaseLearnerSpec learner;
  std::size_t k = 30;
  std::uint64_t num_classifiers = 1000;
  double alpha = 0.001;
  std::uint64_t seed = 0;
  std::vector<AttackModel> attacks{kAllAttackModels.begin(), kAllAttackModels.end()};
  std::filesystem::path out;
  unsigned threads = 0;

  // 0 < alpha < 1, k >= 1, N >= 1.
  void validate() const;
};

// Accepts all, general, modify, delete, insert. "all" expands to every model.
std::vector<AttackModel> parse_attacks(const std::vector<std::string>& names);

void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_certify(const std::filesystem::path& votes, double alpha, const std::vector<AttackModel>& attacks,
                 const std::filesystem::path& out, std::ostream& log);
void cmd_curve(const std::filesystem::path& certificates, const std::filesystem::path& truth, std::uint64_t r_max,
               AttackModel attack, const std::filesystem::path& out, std::ostream& log);
// Returns true when every oracle check passed.
bool cmd_oracle(const OracleSuiteConfig& config, const std::filesystem::path& json_out, std::ostream& log);

/// Full command line (args[0] is the program name). Reads `--config FILE`
/// (flat `key = value` lines named after the long flags); command-line
/// flags override file values.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bagcert::cli

#endif  // BAGCERT_CLI_HPP
