#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "bagcert/dataset.hpp"
#include "bagcert/errors.hpp"
#include "scratch_dir.hpp"

using namespace bagcert;

namespace {

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

// Writes an MNIST-layout pair. `drop` bytes are cut from the image payload.
void write_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                    const std::vector<std::vector<unsigned char>>& pixels, const std::vector<unsigned char>& ys,
                    std::uint32_t rows, std::uint32_t cols, std::size_t drop = 0) {
  std::ofstream img(images, std::ios::binary);
  put_be32(img, 0x803);
  put_be32(img, static_cast<std::uint32_t>(pixels.size()));
  put_be32(img, rows);
  put_be32(img, cols);
  std::vector<unsigned char> flat;
  for (const auto& p : pixels) flat.insert(flat.end(), p.begin(), p.end());
  flat.resize(flat.size() - drop);
  img.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size()));
  std::ofstream lab(labels, std::ios::binary);
  put_be32(lab, 0x801);
  put_be32(lab, static_cast<std::uint32_t>(ys.size()));
  lab.write(reinterpret_cast<const char*>(ys.data()), static_cast<std::streamsize>(ys.size()));
}

Dataset labels_only(std::vector<Label> labels) {
  std::vector<Example> ex;
  for (auto l : labels) ex.push_back({{0.0}, l});
  return Dataset(std::move(ex));
}

}  // namespace

TEST(Csv, ThreeRows) {
  ScratchDir dir;
  write_text(dir / "d.csv", "label,f0,f1\n0,1.5,2\n1,-3,4e2\n0,0,0\n");
  const Dataset d = load_csv(dir / "d.csv");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.num_classes(), 2u);
  EXPECT_EQ(d.dimension(), 2u);
  EXPECT_EQ(d[1].features, (std::vector<double>{-3.0, 400.0}));
  EXPECT_EQ(d.labels(), (std::vector<Label>{0, 1, 0}));
}

TEST(Csv, ClassCountFromLargestLabel) {
  ScratchDir dir;
  write_text(dir / "d.csv", "label,f0\n9,1\n0,2\n");
  EXPECT_EQ(load_csv(dir / "d.csv").num_classes(), 10u);
  EXPECT_EQ(load_csv(dir / "d.csv", 12).num_classes(), 12u);
  EXPECT_THROW(load_csv(dir / "d.csv", 5), ValidationError);
}

TEST(Csv, BadFeatureCitesLine) {
  ScratchDir dir;
  write_text(dir / "d.csv", "label,f0\n0,1\n1,abc\n");
  try {
    load_csv(dir / "d.csv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
}

TEST(Csv, RejectsBadInput) {
  ScratchDir dir;
  write_text(dir / "frac.csv", "label,f0\n1.5,1\n");
  EXPECT_THROW(load_csv(dir / "frac.csv"), ValidationError);
  write_text(dir / "neg.csv", "label,f0\n-1,1\n");
  EXPECT_THROW(load_csv(dir / "neg.csv"), ValidationError);
  write_text(dir / "empty.csv", "");
  EXPECT_THROW(load_csv(dir / "empty.csv"), ValidationError);
  write_text(dir / "header_only.csv", "label,f0\n");
  EXPECT_THROW(load_csv(dir / "header_only.csv"), ValidationError);
  write_text(dir / "ragged.csv", "label,f0,f1\n0,1,2\n1,3\n");
  EXPECT_THROW(load_csv(dir / "ragged.csv"), ParseError);
  write_text(dir / "nohdr.csv", "y,f0\n0,1\n");
  EXPECT_THROW(load_csv(dir / "nohdr.csv"), ParseError);
  write_text(dir / "nan.csv", "label,f0\n0,nan\n");
  EXPECT_THROW(load_csv(dir / "nan.csv"), Error);
  EXPECT_THROW(load_csv(dir / "missing.csv"), Error);
}

TEST(Csv, RoundTripIsExact) {
  ScratchDir dir;
  const Dataset d({{{0.1, -1e-300, 3.0}, 2}, {{1.0 / 3.0, 5e307, -0.0}, 0}});
  write_csv(d, dir / "d.csv");
  const Dataset back = load_csv(dir / "d.csv", d.num_classes());
  EXPECT_EQ(back, d);
}

TEST(Idx, LoadsPairAndScalesPixels) {
  ScratchDir dir;
  write_idx_pair(dir / "img", dir / "lab", {{0, 255, 51, 102}, {255, 255, 0, 0}}, {7, 3}, 2, 2);
  const Dataset d = load_idx(dir / "img", dir / "lab");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.num_classes(), 10u);
  EXPECT_EQ(d.dimension(), 4u);
  EXPECT_EQ(d[0].features, (std::vector<double>{0.0, 1.0, 0.2, 0.4}));
  EXPECT_EQ(d[1].label, 3u);
  EXPECT_EQ(load_idx_labels(dir / "lab"), (std::vector<Label>{7, 3}));
}

TEST(Idx, SingleImage) {
  ScratchDir dir;
  write_idx_pair(dir / "img", dir / "lab", {{1, 2, 3}}, {0}, 1, 3);
  EXPECT_EQ(load_idx(dir / "img", dir / "lab").size(), 1u);
}

TEST(Idx, TruncatedAndMismatchedFiles) {
  ScratchDir dir;
  write_idx_pair(dir / "img", dir / "lab", {{1, 2, 3, 4}, {5, 6, 7, 8}}, {0, 1}, 2, 2, 1);
  EXPECT_THROW(load_idx(dir / "img", dir / "lab"), FormatError);
  write_idx_pair(dir / "img2", dir / "lab2", {{1, 2}}, {0, 1}, 1, 2);
  EXPECT_THROW(load_idx(dir / "img2", dir / "lab2"), FormatError);
  write_text(dir / "bad_magic", std::string("\0\0\x08\x04\0\0\0\0", 8));
  EXPECT_THROW(load_idx_labels(dir / "bad_magic"), FormatError);
}

TEST(Dataset, Validation) {
  EXPECT_THROW(Dataset({}), ValidationError);
  EXPECT_THROW(Dataset({{{1.0}, 0}, {{1.0, 2.0}, 1}}), ValidationError);
  EXPECT_THROW(Dataset({{{INFINITY}, 0}}), ValidationError);
  EXPECT_EQ(Dataset({{{1.0}, 4}}).num_classes(), 5u);
}

TEST(Subsample, SingleExampleAlwaysIndexZero) {
  const auto d = labels_only({1});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = draw_subsample(d, 7, seed);
    EXPECT_EQ(s.indices, std::vector<std::size_t>(7, 0));
  }
}

TEST(Subsample, DeterministicPerSeed) {
  const auto d = labels_only({0, 1, 0, 1, 1});
  EXPECT_EQ(draw_subsample(d, 2, 42), draw_subsample(d, 2, 42));
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    differs = draw_subsample(d, 2, seed) != draw_subsample(d, 2, seed + 1000);
  }
  EXPECT_TRUE(differs);
}

TEST(Subsample, ZeroSizeRejected) {
  EXPECT_THROW(draw_subsample(labels_only({0, 1}), 0, 1), ValidationError);
}

TEST(Subsample, IndicesAreUniform) {
  const auto d = labels_only({0, 1, 0, 1, 1});
  std::array<std::uint64_t, 5> hist{};
  constexpr std::uint64_t kSubsamples = 500'000;  // 10^6 draws at k = 2
  for (std::uint64_t i = 0; i < kSubsamples; ++i) {
    for (auto idx : draw_subsample(d, 2, split_seed(7, i)).indices) ++hist[idx];
  }
  const double draws = 2.0 * kSubsamples;
  const double expected = draws / 5.0;
  const double sigma = std::sqrt(draws * 0.2 * 0.8);
  double chi2 = 0;
  for (auto h : hist) {
    EXPECT_LT(std::abs(static_cast<double>(h) - expected), 3 * sigma);
    chi2 += (h - expected) * (h - expected) / expected;
  }
  EXPECT_LT(chi2, 18.467);  // chi-square, 4 degrees of freedom, p = 0.001
}

TEST(Subsample, UniformIndexCoversSmallRanges) {
  std::mt19937_64 rng(3);
  std::array<int, 3> hist{};
  for (int i = 0; i < 30'000; ++i) ++hist[uniform_index(rng, 3)];
  for (int h : hist) EXPECT_NEAR(h, 10'000, 3 * std::sqrt(30'000 * (1.0 / 3) * (2.0 / 3)));
  EXPECT_EQ(uniform_index(rng, 1), 0u);
}

TEST(Blobs, ShapeAndDeterminism) {
  BlobOptions opt;
  opt.size = 31;
  opt.dimension = 4;
  opt.num_classes = 3;
  opt.seed = 11;
  const Dataset a = make_gaussian_blobs(opt);
  EXPECT_EQ(a.size(), 31u);
  EXPECT_EQ(a.dimension(), 4u);
  EXPECT_EQ(a.num_classes(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].label, i % 3);
  EXPECT_EQ(make_gaussian_blobs(opt), a);
  opt.seed = 12;
  EXPECT_NE(make_gaussian_blobs(opt), a);
}
