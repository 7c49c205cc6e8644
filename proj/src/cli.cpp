#include "bagcert/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "bagcert/dataset.hpp"
#include "bagcert/ensemble.hpp"
#include "bagcert/errors.hpp"
#include "text_util.hpp"

namespace bagcert::cli {

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("--alpha must lie in (0, 1)");
  if (k == 0) throw ValidationError("--k must be at least 1");
  if (num_classifiers == 0) throw ValidationError("--n-classifiers must be at least 1");
  learner.validate();
}

std::vector<AttackModel> parse_attacks(const std::vector<std::string>& names) {
  std::set<AttackModel> chosen;
  for (const auto& name : names) {
    if (name == "all") {
      chosen.insert(kAllAttackModels.begin(), kAllAttackModels.end());
      continue;
    }
    bool matched = false;
    for (auto attack : kAllAttackModels) {
      if (name == to_string(attack)) {
        chosen.insert(attack);
        matched = true;
      }
    }
    if (!matched) throw ValidationError("unknown attack '" + name + "' (expected all, general, modify, delete, insert)");
  }
  if (chosen.empty()) throw ValidationError("no attack model selected");
  return {chosen.begin(), chosen.end()};
}

namespace {

Dataset load_any(const std::filesystem::path& data, const std::filesystem::path& labels,
                 std::optional<std::size_t> num_classes) {
  if (!std::filesystem::exists(data)) throw ValidationError("dataset file not found: " + data.string());
  if (!labels.empty()) {
    Dataset d = load_idx(data, labels);
    if (num_classes) return Dataset({d.examples().begin(), d.examples().end()}, num_classes);
    return d;
  }
  return load_csv(data, num_classes);
}

std::vector<Label> load_truth(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("truth file not found: " + path.string());
  if (path.extension() == ".csv") return load_csv(path).labels();
  return load_idx_labels(path);
}

}  // namespace

void cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.out.empty()) throw ValidationError("train needs --out");
  const auto start = std::chrono::steady_clock::now();
  const Dataset train = load_any(config.dataset, config.dataset_labels, config.num_classes);
  const Dataset test = load_any(config.test, config.test_labels, config.num_classes);
  const TrainOptions options{config.k, config.num_classifiers, config.seed, config.threads};
  const VoteTable votes = train_votes(train, config.learner, options, test);
  write_votes(votes, config.out);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  log << "trained N=" << votes.num_classifiers << " " << votes.learner << " classifiers with k=" << votes.k
      << " on n=" << votes.n << " examples; voted on e=" << votes.rows.size() << " test examples in "
      << std::fixed << std::setprecision(2) << elapsed.count() << "s -> " << config.out.string() << '\n';
  log.unsetf(std::ios::floatfield);
}

void cmd_certify(const std::filesystem::path& votes_path, double alpha, const std::vector<AttackModel>& attacks,
                 const std::filesystem::path& out, std::ostream& log) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("--alpha must lie in (0, 1)");
  if (out.empty()) throw ValidationError("certify needs --out");
  const VoteTable votes = read_votes(votes_path);
  const auto certs = certify_all(votes, alpha, attacks);
  write_certificates(certs, out);
  std::size_t abstained = 0;
  for (const auto& c : certs) abstained += c.abstain();
  log << "certified " << certs.size() << " examples (" << abstained << " abstained) at alpha=" << alpha << " -> "
      << out.string() << '\n';
}

void cmd_curve(const std::filesystem::path& certificates, const std::filesystem::path& truth_path,
               std::uint64_t r_max, AttackModel attack, const std::filesystem::path& out, std::ostream& log) {
  if (out.empty()) throw ValidationError("curve needs --out");
  const auto certs = read_certificates(certificates);
  const auto truth = load_truth(truth_path);
  if (certs.size() != truth.size()) {
    throw ValidationError("certificates list " + std::to_string(certs.size()) + " examples but truth has " +
                          std::to_string(truth.size()));
  }
  std::vector<Label> aligned;
  aligned.reserve(certs.size());
  std::set<std::size_t> seen;
  for (const auto& cert : certs) {
    if (cert.id >= truth.size() || !seen.insert(cert.id).second) {
      throw ValidationError("certificate id " + std::to_string(cert.id) + " does not match the truth file");
    }
    aligned.push_back(truth[cert.id]);
  }
  std::ofstream csv(out, std::ios::binary);
  if (!csv) throw ValidationError("cannot write " + out.string());
  csv << "r,certified_accuracy\n";
  for (std::uint64_t r = 0; r <= r_max; ++r) {
    csv << r << ',' << detail::format_double(certified_accuracy(certs, aligned, r, attack)) << '\n';
  }
  log << "wrote CA_r for r=0.." << r_max << " (" << to_string(attack) << ") -> " << out.string() << '\n';
}

bool cmd_oracle(const OracleSuiteConfig& config, const std::filesystem::path& json_out, std::ostream& log) {
  const auto report = run_oracle_suite(config);
  log << report.to_text();
  if (!json_out.empty()) {
    std::ofstream out(json_out, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + json_out.string());
    out << report.to_json();
  }
  return report.passed();
}

namespace {

// Splices `key = value` lines from --config FILE in front of the explicit
// flags; options keep the last value, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::filesystem::path config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;
  std::ifstream in(config_path);
  if (!in) throw ValidationError("cannot open config file " + config_path.string());
  std::vector<std::string> injected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError("config line is not key = value", line_no);
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ParseError("config line has an empty key", line_no);
    injected.push_back("--" + std::string(key));
    injected.emplace_back(value);
  }
  // rest = program, subcommand, flags...
  std::vector<std::string> out(rest.begin(), rest.begin() + std::min<std::size_t>(2, rest.size()));
  out.insert(out.end(), injected.begin(), injected.end());
  if (rest.size() > 2) out.insert(out.end(), rest.begin() + 2, rest.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"bagcert: certified poisoning sizes for bagging ensembles"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  RunConfig cfg;
  std::string learner = "centroid";
  std::vector<std::string> attacks{"all"};
  std::size_t num_classes = 0;

  auto* train = app.add_subcommand("train", "train N base classifiers and write the vote table");
  train->add_option("--dataset", cfg.dataset, "training set (CSV, or IDX images with --dataset-labels)")->required();
  train->add_option("--dataset-labels", cfg.dataset_labels, "IDX labels for --dataset");
  train->add_option("--test", cfg.test, "test set (CSV, or IDX images with --test-labels)")->required();
  train->add_option("--test-labels", cfg.test_labels, "IDX labels for --test");
  train->add_option("--learner", learner, "centroid, nb or majority")->capture_default_str();
  train->add_option("--nb-smoothing", cfg.learner.smoothing, "naive Bayes additive smoothing")->capture_default_str();
  train->add_option("--k", cfg.k, "subsample size")->capture_default_str();
  train->add_option("--n-classifiers", cfg.num_classifiers, "number of base classifiers N")->capture_default_str();
  train->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  train->add_option("--num-classes", num_classes, "label-space size (default: max label + 1)");
  train->add_option("--threads", cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
  train->add_option("--out", cfg.out, "votes JSON output")->required();

  std::filesystem::path votes_path, certs_path, truth_path, json_out;
  auto* certify = app.add_subcommand("certify", "compute certificates from a vote table");
  certify->add_option("--votes", votes_path, "votes JSON from `train`")->required();
  certify->add_option("--alpha", cfg.alpha, "simultaneous error level")->capture_default_str();
  certify->add_option("--attack", attacks, "all, general, modify, delete, insert (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  certify->add_option("--out", cfg.out, "certificates CSV output")->required();

  std::uint64_t r_max = 100;
  std::string curve_attack = "general";
  auto* curve = app.add_subcommand("curve", "certified accuracy CA_r for r = 0..r_max");
  curve->add_option("--certs", certs_path, "certificates CSV from `certify`")->required();
  curve->add_option("--truth", truth_path, "test set CSV or IDX labels with the true labels")->required();
  curve->add_option("--r-max", r_max, "largest r")->capture_default_str();
  curve->add_option("--attack", curve_attack, "radius column: general (or all), modify, delete, insert")
      ->capture_default_str();
  curve->add_option("--out", cfg.out, "curve CSV output")->required();

  OracleSuiteConfig oracle_cfg;
  auto* oracle = app.add_subcommand("oracle", "exhaustive soundness and tightness checks on toy instances");
  oracle->add_option("--budget", oracle_cfg.budget, "enumeration budget (subsamples per instance)")
      ->capture_default_str();
  oracle->add_option("--max-n", oracle_cfg.max_n, "largest training set in the soundness grid")->capture_default_str();
  oracle->add_option("--max-k", oracle_cfg.max_k, "largest subsample size in the soundness grid")
      ->capture_default_str();
  oracle->add_option("--out", json_out, "JSON report output");

  BlobOptions blobs;
  auto* synth = app.add_subcommand("synth", "write a synthetic Gaussian-blob dataset as CSV");
  synth->add_option("--size", blobs.size)->capture_default_str();
  synth->add_option("--dim", blobs.dimension)->capture_default_str();
  synth->add_option("--classes", blobs.num_classes)->capture_default_str();
  synth->add_option("--spread", blobs.spread)->capture_default_str();
  synth->add_option("--separation", blobs.separation)->capture_default_str();
  synth->add_option("--seed", blobs.seed)->capture_default_str();
  synth->add_option("--out", cfg.out)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      cfg.learner.kind = parse_learner_kind(learner);
      if (num_classes > 0) cfg.num_classes = num_classes;
      cmd_train(cfg, out);
    } else if (certify->parsed()) {
      cmd_certify(votes_path, cfg.alpha, parse_attacks(attacks), cfg.out, out);
    } else if (curve->parsed()) {
      const auto chosen = curve_attack == "all" ? AttackModel::General : parse_attacks({curve_attack}).front();
      cmd_curve(certs_path, truth_path, r_max, chosen, cfg.out, out);
    } else if (oracle->parsed()) {
      if (!cmd_oracle(oracle_cfg, json_out, out)) {
        err << "oracle verification failed\n";
        return kExitVerificationFailed;
      }
    } else if (synth->parsed()) {
      write_csv(make_gaussian_blobs(blobs), cfg.out);
      out << "wrote " << blobs.size << " examples -> " << cfg.out.string() << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace bagcert::cli
