#include "bagcert/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

#include "bagcert/errors.hpp"
#include "text_util.hpp"

namespace bagcert {

Dataset::Dataset(std::vector<Example> examples, std::optional<std::size_t> num_classes)
    : examples_(std::move(examples)) {
  if (examples_.empty()) throw ValidationError("dataset must contain at least one example");
  const std::size_t dim = examples_.front().features.size();
  Label max_label = 0;
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto& ex = examples_[i];
    if (ex.features.size() != dim) {
      throw ValidationError("example " + std::to_string(i) + " has dimension " +
                            std::to_string(ex.features.size()) + ", expected " + std::to_string(dim));
    }
    for (double v : ex.features) {
      if (!std::isfinite(v)) throw ValidationError("example " + std::to_string(i) + " has a non-finite feature");
    }
    max_label = std::max(max_label, ex.label);
  }
  const std::size_t inferred = static_cast<std::size_t>(max_label) + 1;
  if (num_classes) {
    if (*num_classes < inferred) {
      throw ValidationError("label " + std::to_string(max_label) + " does not fit num_classes=" +
                            std::to_string(*num_classes));
    }
    num_classes_ = *num_classes;
  } else {
    num_classes_ = inferred;
  }
}

std::vector<Label> Dataset::labels() const {
  std::vector<Label> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(ex.label);
  return out;
}

namespace {

Label parse_label(std::string_view field, std::size_t line) {
  field = detail::trim(field);
  std::uint64_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end || value > UINT32_MAX) {
    throw ValidationError("line " + std::to_string(line) + ": label '" + std::string(field) +
                          "' is not a non-negative integer");
  }
  return static_cast<Label>(value);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::vector<Example> examples;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    if (!have_header) {
      if (detail::trim(fields.front()) != "label") {
        throw ParseError("header must start with 'label'", line_no);
      }
      dim = fields.size() - 1;
      have_header = true;
      continue;
    }
    if (fields.size() != dim + 1) {
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    Example ex;
    ex.label = parse_label(fields[0], line_no);
    ex.features.reserve(dim);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const auto value = detail::parse_double(fields[j]);
      if (!value) throw ParseError("feature f" + std::to_string(j - 1) + " is not a number: '" +
                                   std::string(detail::trim(fields[j])) + "'", line_no);
      ex.features.push_back(*value);
    }
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw ValidationError(path.string() + " contains no examples");
  return Dataset(std::move(examples), num_classes);
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "label";
  for (std::size_t j = 0; j < dataset.dimension(); ++j) out << ",f" << j;
  out << '\n';
  for (const auto& ex : dataset.examples()) {
    out << ex.label;
    for (double v : ex.features) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& name) {
  if (offset + 4 > bytes.size()) throw FormatError(name + ": truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr std::size_t kIdxClasses = 10;

}  // namespace

std::vector<Label> load_idx_labels(const std::filesystem::path& labels) {
  const auto bytes = read_all(labels);
  const std::string name = labels.string();
  if (read_be32(bytes, 0, name) != kLabelMagic) throw FormatError(name + ": bad magic, expected 0x00000801");
  const std::size_t count = read_be32(bytes, 4, name);
  if (bytes.size() < 8 + count) throw FormatError(name + ": truncated, expected " + std::to_string(count) + " labels");
  std::vector<Label> out(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  for (Label l : out) {
    if (l >= kIdxClasses) throw ValidationError(name + ": label " + std::to_string(l) + " outside [0, 10)");
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto bytes = read_all(images);
  const std::string name = images.string();
  if (read_be32(bytes, 0, name) != kImageMagic) throw FormatError(name + ": bad magic, expected 0x00000803");
  const std::size_t count = read_be32(bytes, 4, name);
  const std::size_t rows = read_be32(bytes, 8, name);
  const std::size_t cols = read_be32(bytes, 12, name);
  const std::size_t dim = rows * cols;
  if (bytes.size() < 16 + count * dim) throw FormatError(name + ": truncated pixel data");

  const auto label_values = load_idx_labels(labels);
  if (label_values.size() != count) {
    throw FormatError("image count " + std::to_string(count) + " does not match label count " +
                      std::to_string(label_values.size()));
  }
  std::vector<Example> examples(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& ex = examples[i];
    ex.label = label_values[i];
    ex.features.resize(dim);
    const unsigned char* px = bytes.data() + 16 + i * dim;
    for (std::size_t j = 0; j < dim; ++j) ex.features[j] = px[j] / 255.0;
  }
  return Dataset(std::move(examples), kIdxClasses);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  // Lemire's multiply-shift with rejection.
  const std::uint64_t range = n;
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64(splitmix64(master) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

Subsample draw_subsample(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ValidationError("subsample size k must be at least 1");
  std::mt19937_64 rng(seed);
  Subsample out;
  out.indices.resize(k);
  for (auto& idx : out.indices) idx = uniform_index(rng, dataset.size());
  return out;
}

Dataset make_gaussian_blobs(const BlobOptions& options) {
  if (options.size == 0 || options.num_classes == 0 || options.dimension == 0) {
    throw ValidationError("blob size, dimension and class count must be positive");
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.spread);
  std::vector<Example> examples(options.size);
  for (std::size_t i = 0; i < options.size; ++i) {
    auto& ex = examples[i];
    ex.label = static_cast<Label>(i % options.num_classes);
    const double angle = 2.0 * std::numbers::pi * ex.label / static_cast<double>(options.num_classes);
    ex.features.assign(options.dimension, 0.0);
    ex.features[0] = options.separation * std::cos(angle);
    if (options.dimension > 1) ex.features[1] = options.separation * std::sin(angle);
    for (double& v : ex.features) v += noise(rng);
  }
  return Dataset(std::move(examples), options.num_classes);
}

}  // namespace bagcert
