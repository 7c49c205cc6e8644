#include "bagcert/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bagcert/errors.hpp"

namespace bagcert {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::NearestCentroid: return "centroid";
    case LearnerKind::NaiveBayes: return "nb";
    case LearnerKind::MajorityLabel: return "majority";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "centroid") return LearnerKind::NearestCentroid;
  if (name == "nb") return LearnerKind::NaiveBayes;
  if (name == "majority") return LearnerKind::MajorityLabel;
  throw ValidationError("unknown learner '" + std::string(name) + "' (expected centroid, nb or majority)");
}

void BaseLearnerSpec::validate() const {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw ValidationError("naive Bayes smoothing must be a finite non-negative number");
  }
}

namespace {

template <class Scores>
Label argmax_smallest(const Scores& scores) {
  Label best = 0;
  for (Label j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return best;
}

MajorityModel fit_majority(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<std::size_t> counts(data.num_classes(), 0);
  for (auto i : idx) ++counts[data[i].label];
  return {argmax_smallest(counts)};
}

CentroidModel fit_centroid(const Dataset& data, std::span<const std::size_t> idx) {
  const std::size_t c = data.num_classes();
  const std::size_t d = data.dimension();
  CentroidModel m;
  m.centroids.assign(c, std::vector<double>(d, 0.0));
  m.present.assign(c, false);
  std::vector<std::size_t> counts(c, 0);
  for (auto i : idx) {
    const auto& ex = data[i];
    auto& row = m.centroids[ex.label];
    for (std::size_t f = 0; f < d; ++f) row[f] += ex.features[f];
    ++counts[ex.label];
  }
  for (std::size_t j = 0; j < c; ++j) {
    if (counts[j] == 0) continue;
    m.present[j] = true;
    for (double& v : m.centroids[j]) v /= static_cast<double>(counts[j]);
  }
  return m;
}

NaiveBayesModel fit_naive_bayes(const BaseLearnerSpec& spec, const Dataset& data, std::span<const std::size_t> idx) {
  const std::size_t c = data.num_classes();
  const std::size_t d = data.dimension();
  std::vector<std::vector<double>> totals(c, std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(c, 0);
  for (auto i : idx) {
    const auto& ex = data[i];
    for (std::size_t f = 0; f < d; ++f) {
      if (ex.features[f] < 0) throw ValidationError("naive Bayes requires non-negative features");
      totals[ex.label][f] += ex.features[f];
    }
    ++counts[ex.label];
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  NaiveBayesModel m;
  m.log_prior.assign(c, kNegInf);
  m.log_likelihood.assign(c, std::vector<double>(d, kNegInf));
  const double k = static_cast<double>(idx.size());
  for (std::size_t j = 0; j < c; ++j) {
    if (counts[j] == 0) continue;
    m.log_prior[j] = std::log(static_cast<double>(counts[j]) / k);
    double denom = spec.smoothing * static_cast<double>(d);
    for (double t : totals[j]) denom += t;
    for (std::size_t f = 0; f < d; ++f) {
      const double num = totals[j][f] + spec.smoothing;
      m.log_likelihood[j][f] = (num > 0 && denom > 0) ? std::log(num / denom) : kNegInf;
    }
  }
  return m;
}

}  // namespace

FittedClassifier fit(const BaseLearnerSpec& spec, const Dataset& dataset, const Subsample& subsample) {
  spec.validate();
  if (subsample.indices.empty()) throw ValidationError("cannot fit on an empty subsample");
  // Canonical order makes floating-point accumulation independent of draw order.
  std::vector<std::size_t> idx = subsample.indices;
  std::sort(idx.begin(), idx.end());
  for (auto i : idx) {
    if (i >= dataset.size()) {
      throw ValidationError("subsample index " + std::to_string(i) + " out of range for n=" +
                            std::to_string(dataset.size()));
    }
    if (dataset[i].label >= dataset.num_classes()) {
      throw ValidationError("subsample references label " + std::to_string(dataset[i].label) + " >= c");
    }
  }

  FittedClassifier::Model model;
  switch (spec.kind) {
    case LearnerKind::MajorityLabel: model = fit_majority(dataset, idx); break;
    case LearnerKind::NearestCentroid: model = fit_centroid(dataset, idx); break;
    case LearnerKind::NaiveBayes: model = fit_naive_bayes(spec, dataset, idx); break;
  }
  return FittedClassifier(std::move(model), dataset.num_classes(), dataset.dimension(), spec.learner_seed);
}

namespace {

struct Predictor {
  std::span<const double> x;

  Label operator()(const MajorityModel& m) const { return m.label; }

  Label operator()(const CentroidModel& m) const {
    std::optional<Label> best;
    double best_dist = 0;
    for (Label j = 0; j < m.centroids.size(); ++j) {
      if (!m.present[j]) continue;
      double dist = 0;
      for (std::size_t f = 0; f < x.size(); ++f) {
        const double diff = x[f] - m.centroids[j][f];
        dist += diff * diff;
      }
      if (!best || dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    return *best;
  }

  Label operator()(const NaiveBayesModel& m) const {
    std::optional<Label> best;
    double best_score = 0;
    for (Label j = 0; j < m.log_prior.size(); ++j) {
      if (std::isinf(m.log_prior[j])) continue;
      double score = m.log_prior[j];
      for (std::size_t f = 0; f < x.size(); ++f) {
        if (x[f] != 0) score += x[f] * m.log_likelihood[j][f];
      }
      if (!best || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    return *best;
  }
};

}  // namespace

Label FittedClassifier::predict(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw ValidationError("input has dimension " + std::to_string(x.size()) + ", classifier expects " +
                          std::to_string(dimension_));
  }
  return std::visit(Predictor{x}, model_);
}

}  // namespace bagcert
