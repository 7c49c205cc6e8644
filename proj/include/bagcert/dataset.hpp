#ifndef BAGCERT_DATASET_HPP
#define BAGCERT_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace bagcert {

using Label = std::uint32_t;

struct Example {
  std::vector<double> features;
  Label label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

/// Ordered, immutable sequence of labeled examples.
///
/// Duplicates are allowed and count with multiplicity: a dataset is a
/// multiset with a fixed indexing, which is what with-replacement
/// subsampling draws from. The label space is [0, num_classes()).
class Dataset {
 public:
  /// Validates the examples. `num_classes` defaults to max label + 1.
  /// Throws ValidationError when empty, when dimensions disagree, when a
  /// feature is not finite, or when a label does not fit `num_classes`.
  explicit Dataset(std::vector<Example> examples, std::optional<std::size_t> num_classes = {});

  std::size_t size() const noexcept { return examples_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t dimension() const noexcept { return examples_.front().features.size(); }

  const Example& operator[](std::size_t i) const { return examples_[i]; }
  std::span<const Example> examples() const noexcept { return examples_; }
  std::vector<Label> labels() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Example> examples_;
  std::size_t num_classes_ = 0;
};

/// Ordered k-tuple of dataset indices drawn with replacement.
struct Subsample {
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const Subsample&, const Subsample&) = default;
};

// CSV with header `label,f0,...,f{d-1}`.
Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes = {});
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

// MNIST-style IDX pair (ubyte images, ubyte labels). Pixels are scaled to [0, 1]; c = 10.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
std::vector<Label> load_idx_labels(const std::filesystem::path& labels);

/// Unbiased draw from [0, n) using the generator's raw 64-bit output, so the
/// sequence is the same on every standard library.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

/// Counter-based seed derivation: the o-th child stream of `master`.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t counter);

Subsample draw_subsample(const Dataset& dataset, std::size_t k, std::uint64_t seed);

struct BlobOptions {
  std::size_t size = 500;
  std::size_t dimension = 2;
  std::size_t num_classes = 3;
  double spread = 1.0;        // per-coordinate standard deviation
  double separation = 2.0;    // distance of each class mean from the origin
  std::uint64_t seed = 0;
};

// Isotropic Gaussian clusters with means evenly spaced on a circle in the
// first two coordinates. Labels cycle 0, 1, ..., c-1.
Dataset make_gaussian_blobs(const BlobOptions& options);

}  // namespace bagcert

#endif  // BAGCERT_DATASET_HPP
