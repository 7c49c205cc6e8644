#ifndef BAGCERT_LEARNERS_HPP
#define BAGCERT_LEARNERS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "bagcert/dataset.hpp"

namespace bagcert {

enum class LearnerKind { NearestCentroid, NaiveBayes, MajorityLabel };

// CLI names: centroid, nb, majority.
std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);

struct BaseLearnerSpec {
  LearnerKind kind = LearnerKind::NearestCentroid;
  double smoothing = 1.0;  // additive smoothing, naive Bayes only
  // Carried into the fitted state. The built-in kinds are deterministic and
  // ignore it, but its presence marks the learner as randomized for
  // consumers that need to enumerate learner randomness.
  std::optional<std::uint64_t> learner_seed;

  void validate() const;
};

struct MajorityModel {
  Label label = 0;

  friend bool operator==(const MajorityModel&, const MajorityModel&) = default;
};

struct CentroidModel {
  // Row j is the mean of class j; classes absent from the subsample are
  // marked in `present` and never predicted.
  std::vector<std::vector<double>> centroids;
  std::vector<bool> present;

  friend bool operator==(const CentroidModel&, const CentroidModel&) = default;
};

// Multinomial event model over non-negative features.
struct NaiveBayesModel {
  std::vector<double> log_prior;                     // -inf for absent classes
  std::vector<std::vector<double>> log_likelihood;   // [class][feature]

  friend bool operator==(const NaiveBayesModel&, const NaiveBayesModel&) = default;
};

class FittedClassifier {
 public:
  using Model = std::variant<MajorityModel, CentroidModel, NaiveBayesModel>;

  FittedClassifier(Model model, std::size_t num_classes, std::size_t dimension,
                   std::optional<std::uint64_t> learner_seed)
      : model_(std::move(model)), num_classes_(num_classes), dimension_(dimension), learner_seed_(learner_seed) {}

  /// Label in [0, c). Score ties go to the smallest label.
  /// Throws ValidationError on a dimension mismatch.
  Label predict(std::span<const double> x) const;

  const Model& model() const noexcept { return model_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  Model model_;
  std::size_t num_classes_;
  std::size_t dimension_;
  std::optional<std::uint64_t> learner_seed_;
};

/// Fits on the examples selected by `subsample`, counted with multiplicity.
/// The fitted state depends only on the multiset of selected examples.
FittedClassifier fit(const BaseLearnerSpec& spec, const Dataset& dataset, const Subsample& subsample);

}  // namespace bagcert

#endif  // BAGCERT_LEARNERS_HPP
