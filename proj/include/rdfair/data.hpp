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

// Dataset provisioning: a synthetic biased-feature generator, IDX files with
// background colorization, and labeled CSV ingestion.

#ifndef RDFAIR_DATA_HPP_
#define RDFAIR_DATA_HPP_

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdfair/coding_rate.hpp"
#include "rdfair/debias_trainer.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"

namespace rdfair {

struct Dataset {
  Matrix features;  // feature_dim x n
  Partition y;
  Partition g;
  std::string split;
  nlohmann::json provenance;

  std::size_t size() const noexcept { return features.cols(); }
  std::size_t dim() const noexcept { return features.rows(); }

  void validate() const {
    if (y.size() != size() || g.size() != size()) {
      fail(ErrorCode::kPartitionMismatch, "dataset label columns differ in length");
    }
  }

  LabeledBatch batch() const { return {features, y, g}; }

  Dataset subset(std::span<const std::size_t> idx) const {
    return {gather_cols(features, idx), y.subset(idx), g.subset(idx), split, provenance};
  }

  // Samples whose target class is in `classes`, in dataset order.
  std::vector<std::size_t> indices_of_classes(std::span<const std::size_t> classes) const {
    std::vector<bool> want(y.k, false);
    for (std::size_t c : classes) {
      if (c < y.k) want[c] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (want[y.labels[i]]) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> class_sizes() const {
    std::vector<std::size_t> out(y.k, 0);
    for (std::size_t l : y.labels) ++out[l];
    return out;
  }
};

// ---------------------------------------------------------------------------
// Synthetic biased data
//
// Features split in two halves. The first half carries the target: a class
// mean (random direction scaled to target_separation) plus isotropic noise.
// The second half carries the protected attribute: a group mean scaled to
// protected_separation plus noise. Class c is assigned group c mod groups.
// In the training split a sample keeps its class's group with probability p
// and otherwise takes one of the other groups uniformly; in the test split
// the group is uniform and independent of the class.

struct BiasSpec {
  double p = 0.9;
  std::size_t num_classes = 4;
  std::size_t num_groups = 2;
  std::size_t samples_per_class = 500;
  std::size_t test_samples_per_class = 200;
  std::size_t feature_dim = 32;
  double target_separation = 1.0;
  double target_noise = 1.0;
  double protected_separation = 3.0;
  double protected_noise = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidSpec, "p must lie in [0, 1]");
    if (num_classes < 1) fail(ErrorCode::kInvalidSpec, "num_classes must be >= 1");
    if (num_groups < 2) fail(ErrorCode::kInvalidSpec, "num_groups must be >= 2");
    if (samples_per_class < 1) fail(ErrorCode::kInvalidSpec, "samples_per_class must be >= 1");
    if (feature_dim < 2) fail(ErrorCode::kInvalidSpec, "feature_dim must be >= 2");
    if (!(target_noise >= 0.0 && protected_noise >= 0.0)) {
      fail(ErrorCode::kInvalidSpec, "noise scales must be >= 0");
    }
  }

  nlohmann::json to_json() const {
    return {{"p", p},
            {"num_classes", num_classes},
            {"num_groups", num_groups},
            {"samples_per_class", samples_per_class},
            {"test_samples_per_class", test_samples_per_class},
            {"feature_dim", feature_dim},
            {"target_separation", target_separation},
            {"target_noise", target_noise},
            {"protected_separation", protected_separation},
            {"protected_noise", protected_noise},
            {"seed", seed}};
  }
};

// Group an in-distribution training sample of `assigned` group receives.
inline std::size_t biased_group(std::size_t assigned, std::size_t groups, double p,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < p) return assigned;
  std::uniform_int_distribution<std::size_t> other(0, groups - 2);
  const std::size_t o = other(rng);
  return o >= assigned ? o + 1 : o;
}

struct SplitPair {
  Dataset train;
  Dataset test;
};

inline SplitPair generate_synthetic(const BiasSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t td = spec.feature_dim / 2;
  const std::size_t pd = spec.feature_dim - td;

  auto random_direction = [&](std::size_t dim, double scale) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x *= scale / norm;
    return v;
  };
  std::vector<std::vector<double>> class_mean, group_mean;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    class_mean.push_back(random_direction(td, spec.target_separation));
  }
  for (std::size_t g = 0; g < spec.num_groups; ++g) {
    group_mean.push_back(random_direction(pd, spec.protected_separation));
  }

  auto build = [&](std::size_t per_class, bool biased, const char* split) {
    Dataset ds;
    ds.split = split;
    ds.features = Matrix(spec.feature_dim, per_class * spec.num_classes);
    ds.y.k = spec.num_classes;
    ds.g.k = spec.num_groups;
    std::uniform_int_distribution<std::size_t> any_group(0, spec.num_groups - 1);
    std::size_t col = 0;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      for (std::size_t s = 0; s < per_class; ++s, ++col) {
        const std::size_t g = biased ? biased_group(c % spec.num_groups, spec.num_groups, spec.p, rng)
                                     : any_group(rng);
        for (std::size_t i = 0; i < td; ++i) {
          ds.features(i, col) = class_mean[c][i] + spec.target_noise * normal(rng);
        }
        for (std::size_t i = 0; i < pd; ++i) {
          ds.features(td + i, col) = group_mean[g][i] + spec.protected_noise * normal(rng);
        }
        ds.y.labels.push_back(c);
        ds.g.labels.push_back(g);
      }
    }
    ds.provenance = {{"generator", "synthetic"}, {"spec", spec.to_json()}};
    return ds;
  };
  SplitPair out;
  out.train = build(spec.samples_per_class, true, "train");
  out.test = build(spec.test_samples_per_class, false, "test");
  return out;
}

// ---------------------------------------------------------------------------
// IDX files: magic bytes 0x00 0x00 <dtype> <ndim>, ndim big-endian uint32
// sizes, then the row-major payload in big-endian element order.

enum class IdxDtype : std::uint8_t {
  kU8 = 0x08,
  kI8 = 0x09,
  kI16 = 0x0B,
  kI32 = 0x0C,
  kF32 = 0x0D,
  kF64 = 0x0E,
};

inline std::size_t idx_element_size(IdxDtype t) {
  switch (t) {
    case IdxDtype::kU8:
    case IdxDtype::kI8: return 1;
    case IdxDtype::kI16: return 2;
    case IdxDtype::kI32:
    case IdxDtype::kF32: return 4;
    case IdxDtype::kF64: return 8;
  }
  return 0;
}

struct IdxTensor {
  IdxDtype dtype = IdxDtype::kU8;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;  // raw big-endian bytes

  std::size_t count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  double at(std::size_t i) const {
    const std::size_t es = idx_element_size(dtype);
    const std::uint8_t* p = payload.data() + i * es;
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < es; ++b) bits = (bits << 8) | p[b];
    switch (dtype) {
      case IdxDtype::kU8: return static_cast<double>(p[0]);
      case IdxDtype::kI8: return static_cast<double>(static_cast<std::int8_t>(p[0]));
      case IdxDtype::kI16: return static_cast<double>(static_cast<std::int16_t>(bits));
      case IdxDtype::kI32: return static_cast<double>(static_cast<std::int32_t>(bits));
      case IdxDtype::kF32: {
        const auto u = static_cast<std::uint32_t>(bits);
        float f;
        std::memcpy(&f, &u, sizeof f);
        return static_cast<double>(f);
      }
      case IdxDtype::kF64: {
        double d;
        std::memcpy(&d, &bits, sizeof d);
        return d;
      }
    }
    return 0.0;
  }

  friend bool operator==(const IdxTensor&, const IdxTensor&) = default;
};

inline IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::kTruncated, "IDX header shorter than 4 bytes");
  if (bytes[0] != 0 || bytes[1] != 0) fail(ErrorCode::kBadMagic, "IDX magic must start 0x0000");
  IdxTensor t;
  switch (bytes[2]) {
    case 0x08:
    case 0x09:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x0E: t.dtype = static_cast<IdxDtype>(bytes[2]); break;
    default: {
      std::ostringstream msg;
      msg << "IDX dtype byte 0x" << std::hex << static_cast<int>(bytes[2]);
      fail(ErrorCode::kUnsupportedDtype, msg.str());
    }
  }
  const std::size_t ndim = bytes[3];
  if (ndim == 0) fail(ErrorCode::kBadMagic, "IDX tensor with zero dimensions");
  if (bytes.size() < 4 + 4 * ndim) fail(ErrorCode::kTruncated, "IDX dimension table truncated");
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint8_t* p = bytes.data() + 4 + 4 * i;
    const std::uint32_t d = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                            (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
    t.dims.push_back(d);
    count *= d;
  }
  const std::size_t header = 4 + 4 * ndim;
  const std::size_t need = count * idx_element_size(t.dtype);
  if (bytes.size() - header < need) {
    fail(ErrorCode::kTruncated, "IDX payload has " + std::to_string(bytes.size() - header) +
                                    " bytes, expected " + std::to_string(need));
  }
  if (bytes.size() - header > need) fail(ErrorCode::kParseError, "IDX file has trailing bytes");
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

inline std::vector<std::uint8_t> encode_idx(const IdxTensor& t) {
  std::vector<std::uint8_t> out{0, 0, static_cast<std::uint8_t>(t.dtype),
                                static_cast<std::uint8_t>(t.dims.size())};
  for (std::uint32_t d : t.dims) {
    out.push_back(static_cast<std::uint8_t>(d >> 24));
    out.push_back(static_cast<std::uint8_t>(d >> 16));
    out.push_back(static_cast<std::uint8_t>(d >> 8));
    out.push_back(static_cast<std::uint8_t>(d));
  }
  out.insert(out.end(), t.payload.begin(), t.payload.end());
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline IdxTensor read_idx(const std::string& path) { return parse_idx(read_file_bytes(path)); }

inline void write_idx(const std::string& path, const IdxTensor& t) {
  write_file_bytes(path, encode_idx(t));
}

// 64-bit FNV-1a, used for provenance and cache keys.
inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Background colorization of grayscale digits.

// Ten RGB background colors spread over the cube.
inline constexpr std::array<std::array<double, 3>, 10> kPalette{{
    {1.0, 0.0, 0.0},
    {0.0, 1.0, 0.0},
    {0.0, 0.0, 1.0},
    {1.0, 1.0, 0.0},
    {1.0, 0.0, 1.0},
    {0.0, 1.0, 1.0},
    {1.0, 0.5, 0.0},
    {0.5, 0.0, 1.0},
    {0.0, 0.5, 0.5},
    {0.5, 0.5, 0.5},
}};

struct ColorizeOptions {
  double p = 0.9;
  bool biased = true;             // false: uniform colors (test split)
  double threshold = 0.3;         // background if intensity < threshold * 255
  std::size_t samples_per_class = 0;  // 0: keep every image
  std::uint64_t seed = 0;
};

// images: n x h x w u8 tensor, labels: n-vector of digit classes in [0, 10).
// Features are the R, G and B planes stacked, scaled to [0, 1]. Background
// pixels take the sample's color; foreground pixels keep their gray level in
// all three channels. g is the palette index.
inline Dataset colorize(const IdxTensor& images, const IdxTensor& labels,
                        const ColorizeOptions& opt) {
  if (images.dims.size() != 3 || images.dtype != IdxDtype::kU8) {
    fail(ErrorCode::kInvalidSpec, "colorize expects an n x h x w u8 image tensor");
  }
  if (labels.dims.size() != 1 || labels.dims[0] != images.dims[0]) {
    fail(ErrorCode::kInvalidSpec, "label vector length must match image count");
  }
  if (!(opt.p >= 0.0 && opt.p <= 1.0)) fail(ErrorCode::kInvalidSpec, "p must lie in [0, 1]");
  const std::size_t n = images.dims[0];
  const std::size_t pixels = std::size_t{images.dims[1]} * images.dims[2];
  const std::size_t groups = kPalette.size();

  std::vector<std::size_t> keep;
  std::vector<std::size_t> per_class(256, 0);
  std::size_t num_classes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(labels.at(i));
    if (c >= groups) fail(ErrorCode::kInvalidSpec, "digit label outside [0, 10)");
    if (opt.samples_per_class > 0 && per_class[c] >= opt.samples_per_class) continue;
    ++per_class[c];
    num_classes = std::max(num_classes, c + 1);
    keep.push_back(i);
  }

  Dataset ds;
  ds.split = opt.biased ? "train" : "test";
  ds.features = Matrix(3 * pixels, keep.size());
  ds.y.k = num_classes;
  ds.g.k = groups;
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> any(0, groups - 1);
  const double cut = opt.threshold * 255.0;
  for (std::size_t col = 0; col < keep.size(); ++col) {
    const std::size_t i = keep[col];
    const auto c = static_cast<std::size_t>(labels.at(i));
    const std::size_t g = opt.biased ? biased_group(c, groups, opt.p, rng) : any(rng);
    const std::uint8_t* img = images.payload.data() + i * pixels;
    for (std::size_t px = 0; px < pixels; ++px) {
      const double v = img[px];
      for (std::size_t ch = 0; ch < 3; ++ch) {
        ds.features(ch * pixels + px, col) = v < cut ? kPalette[g][ch] : v / 255.0;
      }
    }
    ds.y.labels.push_back(c);
    ds.g.labels.push_back(g);
  }
  ds.provenance = {{"generator", "colorize"},
                   {"p", opt.p},
                   {"biased", opt.biased},
                   {"threshold", opt.threshold},
                   {"samples_per_class", opt.samples_per_class},
                   {"seed", opt.seed}};
  return ds;
}

// ---------------------------------------------------------------------------
// Labeled CSV: header row, comma separated. The target and protected columns
// hold categorical labels indexed by first appearance; every other column is
// a numeric feature.

struct LabelMaps {
  std::map<std::string, std::size_t> y;
  std::map<std::string, std::size_t> g;
  std::vector<std::string> y_names;
  std::vector<std::string> g_names;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline std::size_t intern(const std::string& key, std::map<std::string, std::size_t>& map,
                          std::vector<std::string>& names) {
  auto [it, inserted] = map.emplace(key, names.size());
  if (inserted) names.push_back(key);
  return it->second;
}

}  // namespace detail

inline Dataset read_csv_labeled(const std::string& path, const std::string& y_col,
                                const std::string& g_col, LabelMaps* maps = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  LabelMaps local;
  LabelMaps& lm = maps ? *maps : local;

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParseError, path + ": missing header row");
  const auto header = detail::split_csv_line(line);
  std::size_t yi = header.size(), gi = header.size();
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == y_col) {
      yi = c;
    } else if (header[c] == g_col) {
      gi = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (yi == header.size()) fail(ErrorCode::kMissingColumn, "no column named '" + y_col + "'");
  if (gi == header.size()) fail(ErrorCode::kMissingColumn, "no column named '" + g_col + "'");

  std::vector<double> values;
  std::vector<std::size_t> ys, gs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorCode::kParseError, path + ": row " + std::to_string(line_no) + " has " +
                                       std::to_string(fields.size()) + " fields, header has " +
                                       std::to_string(header.size()));
    }
    for (std::size_t c : feature_cols) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v)) {
        fail(ErrorCode::kParseError, path + ": row " + std::to_string(line_no) + ", column '" +
                                         header[c] + "': not a finite number: '" + f + "'");
      }
      values.push_back(v);
    }
    ys.push_back(detail::intern(fields[yi], lm.y, lm.y_names));
    gs.push_back(detail::intern(fields[gi], lm.g, lm.g_names));
  }

  const std::size_t n = ys.size();
  const std::size_t d = feature_cols.size();
  Dataset ds;
  ds.features = Matrix(d, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t f = 0; f < d; ++f) ds.features(f, s) = values[s * d + f];
  ds.y = Partition(std::move(ys), lm.y_names.size());
  ds.g = Partition(std::move(gs), lm.g_names.size());
  ds.split = "csv";
  const auto bytes = read_file_bytes(path);
  ds.provenance = {{"generator", "csv"}, {"path", path}, {"fnv1a", hex64(fnv1a(bytes))}};
  return ds;
}

// ---------------------------------------------------------------------------
// Dataset cache: binary snapshots keyed by a content hash.
//
// Layout: "RDFDS1\0\0", then u64 rows, cols, k_y, k_g, then rows*cols f64
// features, cols u64 y labels, cols u64 g labels (all little-endian host
// order), then the split name and provenance JSON as length-prefixed strings.

inline std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("RDFAIR_CACHE_DIR"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "rdfair";
  }
  return std::filesystem::temp_directory_path() / "rdfair-cache";
}

inline void save_dataset_binary(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  out.write("RDFDS1\0\0", 8);
  put_u64(ds.features.rows());
  put_u64(ds.features.cols());
  put_u64(ds.y.k);
  put_u64(ds.g.k);
  out.write(reinterpret_cast<const char*>(ds.features.values().data()),
            static_cast<std::streamsize>(ds.features.size() * sizeof(double)));
  for (auto l : ds.y.labels) put_u64(l);
  for (auto l : ds.g.labels) put_u64(l);
  const std::string prov = ds.provenance.dump();
  put_u64(ds.split.size());
  out.write(ds.split.data(), static_cast<std::streamsize>(ds.split.size()));
  put_u64(prov.size());
  out.write(prov.data(), static_cast<std::streamsize>(prov.size()));
}

inline Dataset load_dataset_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 8)) fail(ErrorCode::kTruncated, path.string());
    return v;
  };
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "RDFDS1\0\0", 8) != 0) {
    fail(ErrorCode::kBadMagic, "not a dataset snapshot: " + path.string());
  }
  const auto rows = get_u64(), cols = get_u64(), ky = get_u64(), kg = get_u64();
  std::vector<double> vals(rows * cols);
  if (!in.read(reinterpret_cast<char*>(vals.data()),
               static_cast<std::streamsize>(vals.size() * sizeof(double)))) {
    fail(ErrorCode::kTruncated, path.string());
  }
  std::vector<std::size_t> y(cols), g(cols);
  for (auto& l : y) l = get_u64();
  for (auto& l : g) l = get_u64();
  Dataset ds;
  ds.features = Matrix(rows, cols, std::move(vals));
  ds.y = Partition(std::move(y), ky);
  ds.g = Partition(std::move(g), kg);
  std::string split(get_u64(), '\0');
  in.read(split.data(), static_cast<std::streamsize>(split.size()));
  std::string prov(get_u64(), '\0');
  if (!in.read(prov.data(), static_cast<std::streamsize>(prov.size()))) {
    fail(ErrorCode::kTruncated, path.string());
  }
  ds.split = std::move(split);
  ds.provenance = nlohmann::json::parse(prov);
  return ds;
}

// Returns the cached dataset for `key` or builds and stores it.
template <typename Builder>
Dataset cached_dataset(const std::string& key, Builder&& build) {
  const auto dir = cache_dir();
  const auto path = dir / (key + ".rdfds");
  if (std::filesystem::exists(path)) {
    try {
      return load_dataset_binary(path);
    } catch (const Error&) {
      // Corrupt snapshot: rebuild below.
    }
  }
  Dataset ds = build();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!ec) save_dataset_binary(ds, path);
  return ds;
}

struct IdxSource {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

// Colorized train/test pair from four IDX files, cached by content hash.
inline SplitPair load_colored_mnist(const IdxSource& src, double p, std::size_t samples_per_class,
                                    std::size_t test_samples_per_class, double threshold,
                                    std::uint64_t seed) {
  const auto ti = read_file_bytes(src.train_images);
  const auto tl = read_file_bytes(src.train_labels);
  const auto vi = read_file_bytes(src.test_images);
  const auto vl = read_file_bytes(src.test_labels);
  std::uint64_t h = fnv1a(ti);
  h = fnv1a(tl, h);
  h = fnv1a(vi, h);
  h = fnv1a(vl, h);
  std::ostringstream params;
  params << p << ':' << samples_per_class << ':' << test_samples_per_class << ':' << threshold
         << ':' << seed;
  const std::string s = params.str();
  h = fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), h);
  const std::string key = "colored-mnist-" + hex64(h);

  SplitPair out;
  out.train = cached_dataset(key + "-train", [&] {
    return colorize(parse_idx(ti), parse_idx(tl), {p, true, threshold, samples_per_class, seed});
  });
  out.test = cached_dataset(key + "-test", [&] {
    return colorize(parse_idx(vi), parse_idx(vl),
                    {p, false, threshold, test_samples_per_class, seed + 1});
  });
  out.train.provenance["content_hash"] = hex64(h);
  out.test.provenance["content_hash"] = hex64(h);
  return out;
}

}  // namespace rdfair

#endif  // RDFAIR_DATA_HPP_
