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

// Exemplar selection for one class: pick r representative samples out of n
// given their representations (a d x n batch).
//
//  * random      uniform without replacement
//  * prototype   top projections onto the leading eigenvectors of the class
//                second-moment matrix, r/k samples per eigenvector
//  * submodular  lazy greedy maximization of the facility-location function
//                f(S) = sum_z max_{s in S} -|s - z|^2

#ifndef RDFAIR_EXEMPLAR_SELECT_HPP_
#define RDFAIR_EXEMPLAR_SELECT_HPP_

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"

namespace rdfair {

enum class SamplerKind { kRandom, kPrototype, kSubmodular };

inline const char* sampler_kind_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::kRandom: return "random";
    case SamplerKind::kPrototype: return "prototype";
    case SamplerKind::kSubmodular: return "submodular";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "random") return SamplerKind::kRandom;
  if (s == "prototype") return SamplerKind::kPrototype;
  if (s == "submodular") return SamplerKind::kSubmodular;
  fail(ErrorCode::kInvalidConfig, "unknown sampler '" + s + "'");
}

struct SamplerSpec {
  SamplerKind kind = SamplerKind::kRandom;
  std::size_t r = 20;
  std::size_t k_eigen = 4;  // prototype only
  bool center = false;      // prototype only: eigendecompose the covariance instead

  void validate() const {
    if (r < 1) fail(ErrorCode::kInvalidConfig, "exemplars_per_class must be >= 1");
    if (kind == SamplerKind::kPrototype && k_eigen < 1) {
      fail(ErrorCode::kInvalidConfig, "k_eigen must be >= 1");
    }
  }
};

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// r distinct indices from [0, n), uniform without replacement (partial
// Fisher-Yates). All indices when r >= n.
inline std::vector<std::size_t> sample_random(std::size_t n, std::size_t r, std::uint64_t seed) {
  if (r >= n) return all_indices(n);
  std::vector<std::size_t> idx = all_indices(n);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < r; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(r);
  return idx;
}

namespace detail {

inline bool all_columns_identical(const Matrix& z) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto row = z.row(r);
    for (std::size_t c = 1; c < z.cols(); ++c) {
      if (std::abs(row[c] - row[0]) > 1e-12) return false;
    }
  }
  return true;
}

}  // namespace detail

// Eigenvector prototype sampling.
//
// Eigenvectors are sign-oriented so the class projects onto them with a
// nonnegative sum. Eigenvector j takes r/k samples plus one of the r % k
// remainder slots if j < r % k. A sample already chosen by an earlier
// eigenvector is skipped and the next-ranked one fills the slot.
inline std::vector<std::size_t> sample_prototype(const Matrix& reps, std::size_t r,
                                                 std::size_t k_eigen, bool center = false) {
  const std::size_t n = reps.cols();
  const std::size_t d = reps.rows();
  if (n == 0) fail(ErrorCode::kEmpty, "prototype sampling on an empty class");
  if (k_eigen < 1) fail(ErrorCode::kInvalidSpec, "k_eigen must be >= 1");
  if (r >= n) return all_indices(n);
  if (k_eigen > 1 && detail::all_columns_identical(reps)) {
    std::cerr << "warning: DegenerateClass: identical representations, falling back to random "
                 "exemplar sampling\n";
    return sample_random(n, r, 0);
  }

  Matrix z = reps;
  if (center) {
    for (std::size_t i = 0; i < d; ++i) {
      auto row = z.row(i);
      const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n);
      for (double& v : row) v -= mean;
    }
  }
  Matrix moment = gram_rows(z);
  moment *= 1.0 / static_cast<double>(n);
  const SymEig eig = sym_eig(moment);
  const std::size_t k = std::min(k_eigen, d);

  std::vector<bool> taken(n, false);
  std::vector<std::size_t> chosen;
  chosen.reserve(r);
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> score(n, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double vi = eig.vectors(i, j);
      const auto row = reps.row(i);
      for (std::size_t c = 0; c < n; ++c) score[c] += vi * row[c];
    }
    if (std::accumulate(score.begin(), score.end(), 0.0) < 0.0) {
      for (double& s : score) s = -s;
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::size_t quota = r / k + (j < r % k ? 1 : 0);
    for (std::size_t pos = 0; pos < n && quota > 0; ++pos) {
      if (taken[order[pos]]) continue;
      taken[order[pos]] = true;
      chosen.push_back(order[pos]);
      --quota;
    }
  }
  return chosen;
}

inline double squared_distance(const Matrix& reps, std::size_t a, std::size_t b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < reps.rows(); ++i) {
    const double diff = reps(i, a) - reps(i, b);
    acc += diff * diff;
  }
  return acc;
}

inline double facility_location_value(const Matrix& reps, std::span<const std::size_t> subset) {
  if (subset.empty()) fail(ErrorCode::kEmptySubset, "facility location of the empty set");
  for (std::size_t s : subset) {
    if (s >= reps.cols()) fail(ErrorCode::kShapeMismatch, "subset index out of range");
  }
  double total = 0.0;
  for (std::size_t z = 0; z < reps.cols(); ++z) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s : subset) best = std::max(best, -squared_distance(reps, s, z));
    total += best;
  }
  return total;
}

namespace detail {

inline Matrix pairwise_sq_distances(const Matrix& reps) {
  const std::size_t n = reps.cols();
  Matrix dist(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) dist(a, b) = dist(b, a) = squared_distance(reps, a, b);
  return dist;
}

// Marginal gain of adding s given current per-point coverage.
inline double coverage_gain(const Matrix& dist, const std::vector<double>& cover, std::size_t s) {
  double gain = 0.0;
  const auto row = dist.row(s);
  for (std::size_t z = 0; z < cover.size(); ++z) gain += std::max(0.0, -row[z] - cover[z]);
  return gain;
}

inline std::size_t best_singleton(const Matrix& dist) {
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < dist.rows(); ++s) {
    double v = 0.0;
    for (double x : dist.row(s)) v -= x;
    if (v > best_val) {
      best_val = v;
      best = s;
    }
  }
  return best;
}

inline void apply_pick(const Matrix& dist, std::vector<double>& cover, std::size_t s) {
  const auto row = dist.row(s);
  for (std::size_t z = 0; z < cover.size(); ++z) cover[z] = std::max(cover[z], -row[z]);
}

}  // namespace detail

// Greedy facility location with lazy marginal-gain re-evaluation. Each pick
// has a maximal marginal gain; equal gains go to the lowest index. A class no
// larger than r is returned whole, in index order.
inline std::vector<std::size_t> sample_submodular(const Matrix& reps, std::size_t r) {
  const std::size_t n = reps.cols();
  if (n == 0) fail(ErrorCode::kEmpty, "submodular sampling on an empty class");
  if (r >= n) return all_indices(n);

  const Matrix dist = detail::pairwise_sq_distances(reps);
  std::vector<double> cover(n, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> chosen;
  chosen.reserve(r);
  std::vector<bool> taken(n, false);

  // f(empty) is -inf, so the first pick compares singleton values directly.
  const std::size_t first = detail::best_singleton(dist);
  chosen.push_back(first);
  taken[first] = true;
  detail::apply_pick(dist, cover, first);

  struct Entry {
    double bound;
    std::size_t index;
    std::size_t round;
  };
  // Max-heap on (bound, -index). Each entry remembers the round its bound was
  // computed in; a fresh entry on top beats every stale upper bound.
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.index > b.index;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  for (std::size_t s = 0; s < n; ++s) {
    if (!taken[s]) heap.push({detail::coverage_gain(dist, cover, s), s, 1});
  }
  for (std::size_t round = 1; chosen.size() < r; ++round) {
    for (;;) {
      Entry top = heap.top();
      heap.pop();
      if (top.round == round) {
        chosen.push_back(top.index);
        taken[top.index] = true;
        detail::apply_pick(dist, cover, top.index);
        break;
      }
      top.bound = detail::coverage_gain(dist, cover, top.index);
      top.round = round;
      heap.push(top);
    }
  }
  return chosen;
}

// Dispatch on the sampler kind. `seed` only affects the random sampler.
inline std::vector<std::size_t> select_exemplars(const Matrix& reps, const SamplerSpec& spec,
                                                 std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case SamplerKind::kRandom: return sample_random(reps.cols(), spec.r, seed);
    case SamplerKind::kPrototype: return sample_prototype(reps, spec.r, spec.k_eigen, spec.center);
    case SamplerKind::kSubmodular: return sample_submodular(reps, spec.r);
  }
  fail(ErrorCode::kSamplerFailure, "unknown sampler");
}

}  // namespace rdfair

#endif  // RDFAIR_EXEMPLAR_SELECT_HPP_
