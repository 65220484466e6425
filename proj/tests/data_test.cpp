// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "rdfair/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "rdfair/errors.hpp"

namespace rdfair {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rdfair_data_test";
  fs::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

// Pearson chi-square statistic of the (y, g) contingency table.
double chi_square(const Dataset& ds) {
  std::vector<std::vector<double>> table(ds.y.k, std::vector<double>(ds.g.k, 0.0));
  for (std::size_t i = 0; i < ds.size(); ++i) table[ds.y.labels[i]][ds.g.labels[i]] += 1.0;
  std::vector<double> row(ds.y.k, 0.0), col(ds.g.k, 0.0);
  for (std::size_t a = 0; a < ds.y.k; ++a)
    for (std::size_t b = 0; b < ds.g.k; ++b) {
      row[a] += table[a][b];
      col[b] += table[a][b];
    }
  const double n = static_cast<double>(ds.size());
  double chi = 0.0;
  for (std::size_t a = 0; a < ds.y.k; ++a)
    for (std::size_t b = 0; b < ds.g.k; ++b) {
      const double e = row[a] * col[b] / n;
      chi += (table[a][b] - e) * (table[a][b] - e) / e;
    }
  return chi;
}

double match_rate(const Dataset& ds, std::size_t groups) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hit += ds.g.labels[i] == ds.y.labels[i] % groups;
  return static_cast<double>(hit) / static_cast<double>(ds.size());
}

TEST(Synthetic, DeterministicFromSeed) {
  BiasSpec spec;
  spec.samples_per_class = 50;
  spec.seed = 9;
  const SplitPair a = generate_synthetic(spec);
  const SplitPair b = generate_synthetic(spec);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.train.g, b.train.g);
  EXPECT_EQ(a.test.features, b.test.features);
  spec.seed = 10;
  EXPECT_FALSE(generate_synthetic(spec).train.features == a.train.features);
}

TEST(Synthetic, ShapesAndLabels) {
  BiasSpec spec;
  spec.num_classes = 3;
  spec.samples_per_class = 20;
  spec.test_samples_per_class = 7;
  spec.feature_dim = 10;
  const SplitPair s = generate_synthetic(spec);
  EXPECT_EQ(s.train.dim(), 10u);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.test.size(), 21u);
  EXPECT_EQ(s.train.class_sizes(), (std::vector<std::size_t>{20, 20, 20}));
  EXPECT_EQ(s.train.split, "train");
  EXPECT_EQ(s.test.split, "test");
  EXPECT_EQ(s.train.provenance.at("spec").at("seed"), 0);
}

TEST(Synthetic, FullBiasIsDiagonal) {
  BiasSpec spec;
  spec.p = 1.0;
  spec.samples_per_class = 100;
  const Dataset train = generate_synthetic(spec).train;
  EXPECT_EQ(match_rate(train, 2), 1.0);
}

TEST(Synthetic, MatchRateBinomial) {
  BiasSpec spec;
  spec.p = 0.9;
  spec.samples_per_class = 1000;
  spec.seed = 3;
  const Dataset train = generate_synthetic(spec).train;
  const double n = static_cast<double>(train.size());
  EXPECT_LT(std::abs(match_rate(train, 2) - 0.9), 3.0 * std::sqrt(0.9 * 0.1 / n));
}

TEST(Synthetic, UniformBiasMatchesTestDistribution) {
  BiasSpec spec;
  spec.p = 0.5;  // 1 / num_groups
  spec.samples_per_class = 2000;
  spec.test_samples_per_class = 2000;
  const SplitPair s = generate_synthetic(spec);
  // 3 degrees of freedom, 0.01 upper quantile.
  EXPECT_LT(chi_square(s.train), 11.345);
  EXPECT_LT(chi_square(s.test), 11.345);
}

TEST(Synthetic, TestSplitIndependentAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BiasSpec spec;
    spec.seed = seed;
    EXPECT_LT(chi_square(generate_synthetic(spec).test), 11.345) << "seed " << seed;
  }
}

TEST(Synthetic, InvalidSpec) {
  BiasSpec spec;
  spec.p = 1.5;
  EXPECT_EQ(code_of([&] { generate_synthetic(spec); }), ErrorCode::kInvalidSpec);
  spec.p = 0.5;
  spec.num_groups = 1;
  EXPECT_EQ(code_of([&] { generate_synthetic(spec); }), ErrorCode::kInvalidSpec);
}

std::vector<std::uint8_t> image_fixture() {
  return {0x00, 0x00, 0x08, 0x03, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2,
          1,    2,    3,    4,    5, 6, 7, 8};
}

TEST(Idx, ParsesCraftedImageFixture) {
  const IdxTensor t = parse_idx(image_fixture());
  EXPECT_EQ(t.dtype, IdxDtype::kU8);
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 2, 2}));
  EXPECT_EQ(t.count(), 8u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(t.at(i), static_cast<double>(i + 1));
}

TEST(Idx, LabelVector) {
  const std::vector<std::uint8_t> bytes{0, 0, 0x08, 0x01, 0, 0, 0, 3, 7, 0, 9};
  const IdxTensor t = parse_idx(bytes);
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(t.at(0), 7.0);
  EXPECT_EQ(t.at(2), 9.0);
}

TEST(Idx, WideDtypesAreBigEndian) {
  const std::vector<std::uint8_t> i16{0, 0, 0x0B, 1, 0, 0, 0, 2, 0xFF, 0xFE, 0x01, 0x00};
  EXPECT_EQ(parse_idx(i16).at(0), -2.0);
  EXPECT_EQ(parse_idx(i16).at(1), 256.0);
  const std::vector<std::uint8_t> f32{0, 0, 0x0D, 1, 0, 0, 0, 1, 0x3F, 0xC0, 0x00, 0x00};
  EXPECT_EQ(parse_idx(f32).at(0), 1.5);
  const std::vector<std::uint8_t> f64{0, 0, 0x0E, 1, 0, 0, 0, 1, 0xC0, 0x04, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(parse_idx(f64).at(0), -2.5);
}

TEST(Idx, ByteExactRoundTrip) {
  for (const auto& bytes : {image_fixture(),
                            std::vector<std::uint8_t>{0, 0, 0x0C, 2, 0, 0, 0, 1, 0, 0, 0, 2,
                                                      0x80, 0, 0, 1, 0x7F, 0xFF, 0xFF, 0xFF}}) {
    EXPECT_EQ(encode_idx(parse_idx(bytes)), bytes);
  }
  const fs::path path = scratch("round.idx");
  write_idx(path.string(), parse_idx(image_fixture()));
  EXPECT_EQ(read_file_bytes(path.string()), image_fixture());
  EXPECT_EQ(read_idx(path.string()), parse_idx(image_fixture()));
}

TEST(Idx, CorruptedFixtures) {
  auto bad_magic = image_fixture();
  bad_magic[0] = 0x01;
  EXPECT_EQ(code_of([&] { parse_idx(bad_magic); }), ErrorCode::kBadMagic);
  auto truncated = image_fixture();
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { parse_idx(truncated); }), ErrorCode::kTruncated);
  EXPECT_EQ(code_of([&] { parse_idx(std::vector<std::uint8_t>{0, 0, 8}); }), ErrorCode::kTruncated);
  auto dtype = image_fixture();
  dtype[2] = 0x0A;
  EXPECT_EQ(code_of([&] { parse_idx(dtype); }), ErrorCode::kUnsupportedDtype);
  auto trailing = image_fixture();
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { parse_idx(trailing); }), ErrorCode::kParseError);
}

// n images of h x w with a bright 2x2 foreground block and a black background.
std::pair<IdxTensor, IdxTensor> digit_fixture(std::size_t n, std::size_t classes) {
  IdxTensor images{IdxDtype::kU8, {static_cast<std::uint32_t>(n), 4, 4}, {}};
  IdxTensor labels{IdxDtype::kU8, {static_cast<std::uint32_t>(n)}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t px = 0; px < 16; ++px) {
      const bool fg = px == 5 || px == 6 || px == 9 || px == 10;
      images.payload.push_back(fg ? static_cast<std::uint8_t>(200 + i % 50) : 0);
    }
    labels.payload.push_back(static_cast<std::uint8_t>(i % classes));
  }
  return {images, labels};
}

TEST(Colorize, FullBiasUsesPaletteIndex) {
  const auto [images, labels] = digit_fixture(100, 10);
  const Dataset ds = colorize(images, labels, {1.0, true, 0.3, 0, 1});
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds.g.labels[i], ds.y.labels[i]);
}

TEST(Colorize, ForegroundUnchangedBackgroundColored) {
  const auto [images, labels] = digit_fixture(30, 10);
  const Dataset ds = colorize(images, labels, {0.7, true, 0.3, 0, 2});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& color = kPalette[ds.g.labels[i]];
    for (std::size_t px = 0; px < 16; ++px) {
      const double v = images.payload[i * 16 + px];
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double got = ds.features(ch * 16 + px, i);
        if (v < 0.3 * 255) {
          EXPECT_EQ(got, color[ch]);
        } else {
          EXPECT_EQ(got, v / 255.0);
        }
      }
    }
  }
}

TEST(Colorize, AllBlackTakesBackground) {
  IdxTensor images{IdxDtype::kU8, {1, 3, 3}, std::vector<std::uint8_t>(9, 0)};
  IdxTensor labels{IdxDtype::kU8, {1}, {4}};
  const Dataset ds = colorize(images, labels, {1.0, true, 0.3, 0, 0});
  for (std::size_t px = 0; px < 9; ++px)
    for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(ds.features(ch * 9 + px, 0), kPalette[4][ch]);
}

TEST(Colorize, AssignedRateBinomial) {
  const auto [images, labels] = digit_fixture(10000, 10);
  const Dataset ds = colorize(images, labels, {0.8, true, 0.3, 0, 5});
  std::size_t hit = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hit += ds.g.labels[i] == ds.y.labels[i];
  const double rate = static_cast<double>(hit) / 10000.0;
  EXPECT_LT(std::abs(rate - 0.8), 3.0 * std::sqrt(0.8 * 0.2 / 10000.0));
}

TEST(Colorize, SubsamplesPerClass) {
  const auto [images, labels] = digit_fixture(200, 10);
  const Dataset ds = colorize(images, labels, {0.8, false, 0.3, 5, 5});
  EXPECT_EQ(ds.size(), 50u);
  EXPECT_EQ(ds.class_sizes(), std::vector<std::size_t>(10, 5));
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

TEST(Csv, TwoRowFixture) {
  const fs::path p = scratch("two.csv");
  write(p, "a,gender,b,label\n1.5,f,-2,doctor\n0.25,m,3e2,nurse\n");
  const Dataset ds = read_csv_labeled(p.string(), "label", "gender");
  EXPECT_EQ(ds.features, Matrix::from_rows({{1.5, 0.25}, {-2.0, 300.0}}));
  EXPECT_EQ(ds.y.labels, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(ds.g.labels, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(ds.y.k, 2u);
}

TEST(Csv, LabelIndexStableAcrossReads) {
  const fs::path p = scratch("stable.csv");
  write(p, "x,y,g\n1,b,u\n2,a,v\n3,b,v\n4,c,u\n");
  const Dataset a = read_csv_labeled(p.string(), "y", "g");
  const Dataset b = read_csv_labeled(p.string(), "y", "g");
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.y.labels, (std::vector<std::size_t>{0, 1, 0, 2}));
  EXPECT_EQ(a.provenance.at("fnv1a"), b.provenance.at("fnv1a"));
}

TEST(Csv, Errors) {
  const fs::path p = scratch("bad.csv");
  write(p, "x,y\n1,a\n");
  EXPECT_EQ(code_of([&] { read_csv_labeled(p.string(), "y", "g"); }), ErrorCode::kMissingColumn);
  write(p, "x,y,g\n1,a,u\noops,b,v\n");
  try {
    read_csv_labeled(p.string(), "y", "g");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos);
  }
  write(p, "x,y,g\n1,a\n");
  EXPECT_EQ(code_of([&] { read_csv_labeled(p.string(), "y", "g"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([&] { read_csv_labeled(scratch("missing.csv").string(), "y", "g"); }),
            ErrorCode::kIo);
}

TEST(Cache, SnapshotRoundTrip) {
  BiasSpec spec;
  spec.samples_per_class = 10;
  const Dataset ds = generate_synthetic(spec).train;
  const fs::path p = scratch("snap.rdfds");
  save_dataset_binary(ds, p);
  const Dataset back = load_dataset_binary(p);
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.g, ds.g);
  EXPECT_EQ(back.provenance, ds.provenance);
}

TEST(Cache, EnvironmentOverride) {
  const fs::path dir = scratch("cache_dir");
  ::setenv("RDFAIR_CACHE_DIR", dir.c_str(), 1);
  EXPECT_EQ(cache_dir(), dir);
  int builds = 0;
  auto build = [&] {
    ++builds;
    BiasSpec spec;
    spec.samples_per_class = 5;
    return generate_synthetic(spec).train;
  };
  fs::remove_all(dir);
  const Dataset a = cached_dataset("k", build);
  const Dataset b = cached_dataset("k", build);
  EXPECT_EQ(builds, 1);
  EXPECT_EQ(a.features, b.features);
  ::unsetenv("RDFAIR_CACHE_DIR");
}

TEST(Cache, ColoredMnistFromFiles) {
  const auto [images, labels] = digit_fixture(60, 10);
  const IdxSource src{scratch("ti.idx").string(), scratch("tl.idx").string(),
                      scratch("vi.idx").string(), scratch("vl.idx").string()};
  write_idx(src.train_images, images);
  write_idx(src.train_labels, labels);
  write_idx(src.test_images, images);
  write_idx(src.test_labels, labels);
  ::setenv("RDFAIR_CACHE_DIR", scratch("mnist_cache").c_str(), 1);
  const SplitPair a = load_colored_mnist(src, 0.8, 0, 0, 0.3, 1);
  const SplitPair b = load_colored_mnist(src, 0.8, 0, 0, 0.3, 1);
  ::unsetenv("RDFAIR_CACHE_DIR");
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.train.size(), 60u);
  EXPECT_EQ(a.train.dim(), 48u);
  EXPECT_EQ(a.train.provenance.at("content_hash"), b.train.provenance.at("content_hash"));
}

TEST(Hash, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a(std::vector<std::uint8_t>{}), 0xcbf29ce484222325ULL);
  const std::string a = "a";
  EXPECT_EQ(fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(a.data()), 1)),
            0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace rdfair
