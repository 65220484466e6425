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

// Coding-rate (rate-distortion) objectives over representation batches and
// their analytic gradients.
//
//   R(Z)      = 1/2 log2 det(I + a Z Z^T),            a = d / (n eps^2)
//   R_c(Z|P)  = sum_j (n_j / n) R(Z_j)                 (Z_j = columns of class j)
//   dR(Z|P)   = R(Z) - R_c(Z|P)
//   S(Z, Zr)  = sum_i R([Z_i, Zr_i]) - (R(Z_i) + R(Zr_i)) / 2
//
// The per-class form of R_c is the membership-matrix expression with hard
// assignments: tr(P_j) = n_j and Z P_j Z^T = Z_j Z_j^T, so
// (tr P_j / 2n) log2 det(I + d/(tr P_j eps^2) Z P_j Z^T) = (n_j / n) R(Z_j).
//
// dR/dZ = (a / ln 2) (I + a Z Z^T)^{-1} Z, evaluated on whichever Gram side is
// smaller via the push-through identity (I + a Z Z^T)^{-1} Z = Z (I + a Z^T Z)^{-1}.

#ifndef RDFAIR_CODING_RATE_HPP_
#define RDFAIR_CODING_RATE_HPP_

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"

namespace rdfair {

// A d x n batch of representation vectors, one sample per column.
using RepBatch = Matrix;

// Hard class assignment for every sample of a batch.
struct Partition {
  std::vector<std::size_t> labels;
  std::size_t k = 0;

  Partition() = default;
  Partition(std::vector<std::size_t> labels_in, std::size_t k_in)
      : labels(std::move(labels_in)), k(k_in) {
    for (std::size_t l : labels) {
      if (l >= k) fail(ErrorCode::kPartitionMismatch, "label outside [0, k)");
    }
  }

  // k = 1 + max label.
  static Partition from_labels(std::vector<std::size_t> labels_in) {
    std::size_t k = 0;
    for (std::size_t l : labels_in) k = std::max(k, l + 1);
    return Partition(std::move(labels_in), k);
  }

  std::size_t size() const noexcept { return labels.size(); }

  // Sample indices of every class, empty classes included.
  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
  }

  Partition subset(std::span<const std::size_t> idx) const {
    Partition p;
    p.k = k;
    p.labels.reserve(idx.size());
    for (std::size_t i : idx) p.labels.push_back(labels[i]);
    return p;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct RateConfig {
  double epsilon_sq = 0.25;

  void validate() const {
    if (!(epsilon_sq > 0.0 && epsilon_sq <= 4.0)) {
      fail(ErrorCode::kInvalidSpec, "epsilon_sq must lie in (0, 4]");
    }
  }
};

enum class GramSide { kAuto, kFeature, kSample };

namespace detail {

inline void require_batch(const Matrix& z) {
  if (z.rows() == 0 || z.cols() == 0) fail(ErrorCode::kEmpty, "representation batch is empty");
}

inline void require_partition(const Matrix& z, const Partition& p) {
  if (p.size() != z.cols()) {
    fail(ErrorCode::kPartitionMismatch, "partition has " + std::to_string(p.size()) +
                                            " labels for " + std::to_string(z.cols()) + " samples");
  }
}

inline double rate_alpha(const Matrix& z, const RateConfig& cfg) {
  return static_cast<double>(z.rows()) / (static_cast<double>(z.cols()) * cfg.epsilon_sq);
}

// I + a G
inline Matrix shifted_gram(const Matrix& gram, double a) {
  Matrix m = a * gram;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
  return m;
}

inline double logdet_or_throw(const Matrix& m) {
  try {
    return logdet_spd(m);
  } catch (const Error& e) {
    fail(ErrorCode::kNumericalFailure, std::string("coding-rate factorization: ") + e.what());
  }
}

inline void scatter_add_cols(Matrix& dst, const Matrix& src, std::span<const std::size_t> cols,
                             double scale) {
  for (std::size_t r = 0; r < dst.rows(); ++r) {
    auto drow = dst.row(r);
    const auto srow = src.row(r);
    for (std::size_t j = 0; j < cols.size(); ++j) drow[cols[j]] += scale * srow[j];
  }
}

}  // namespace detail

inline double rate(const RepBatch& z, const RateConfig& cfg, GramSide side = GramSide::kAuto) {
  detail::require_batch(z);
  const double a = detail::rate_alpha(z, cfg);
  const bool feature_side =
      side == GramSide::kFeature || (side == GramSide::kAuto && z.rows() <= z.cols());
  const Matrix gram = feature_side ? gram_rows(z) : gram_cols(z);
  return detail::logdet_or_throw(detail::shifted_gram(gram, a)) / (2.0 * std::numbers::ln2);
}

inline Matrix rate_grad(const RepBatch& z, const RateConfig& cfg) {
  detail::require_batch(z);
  const double a = detail::rate_alpha(z, cfg);
  Matrix g;
  if (z.rows() <= z.cols()) {
    g = solve_spd(detail::shifted_gram(gram_rows(z), a), z);
  } else {
    g = transpose(solve_spd(detail::shifted_gram(gram_cols(z), a), transpose(z)));
  }
  g *= a / std::numbers::ln2;
  return g;
}

inline double rate_partitioned(const RepBatch& z, const Partition& p, const RateConfig& cfg) {
  detail::require_batch(z);
  detail::require_partition(z, p);
  const double n = static_cast<double>(z.cols());
  double acc = 0.0;
  for (const auto& cols : p.members()) {
    if (cols.empty()) continue;
    acc += (static_cast<double>(cols.size()) / n) * rate(gather_cols(z, cols), cfg);
  }
  return acc;
}

inline Matrix rate_partitioned_grad(const RepBatch& z, const Partition& p, const RateConfig& cfg) {
  detail::require_batch(z);
  detail::require_partition(z, p);
  const double n = static_cast<double>(z.cols());
  Matrix g(z.rows(), z.cols());
  for (const auto& cols : p.members()) {
    if (cols.empty()) continue;
    const Matrix gj = rate_grad(gather_cols(z, cols), cfg);
    detail::scatter_add_cols(g, gj, cols, static_cast<double>(cols.size()) / n);
  }
  return g;
}

inline double delta_rate(const RepBatch& z, const Partition& p, const RateConfig& cfg) {
  detail::require_partition(z, p);
  return rate(z, cfg) - rate_partitioned(z, p, cfg);
}

inline Matrix delta_rate_grad(const RepBatch& z, const Partition& p, const RateConfig& cfg) {
  Matrix g = rate_grad(z, cfg);
  g -= rate_partitioned_grad(z, p, cfg);
  return g;
}

namespace detail {

inline void require_same_universe(const Matrix& z_new, const Matrix& z_ref, const Partition& p_new,
                                  const Partition& p_ref) {
  if (z_new.rows() != z_ref.rows()) {
    fail(ErrorCode::kDimMismatch, "subspace similarity needs batches of equal dimension");
  }
  require_partition(z_new, p_new);
  require_partition(z_ref, p_ref);
  if (p_new.k != p_ref.k) {
    fail(ErrorCode::kPartitionMismatch, "partitions are over different class universes");
  }
}

}  // namespace detail

// Retention term: how many more bits the union of current and frozen class
// representations costs than the two halves separately. Classes absent from
// either side are skipped.
inline double subspace_similarity(const RepBatch& z_new, const RepBatch& z_ref,
                                  const Partition& class_of_new, const Partition& class_of_ref,
                                  const RateConfig& cfg) {
  detail::require_same_universe(z_new, z_ref, class_of_new, class_of_ref);
  const auto new_members = class_of_new.members();
  const auto ref_members = class_of_ref.members();
  double acc = 0.0;
  for (std::size_t c = 0; c < class_of_new.k; ++c) {
    if (new_members[c].empty() || ref_members[c].empty()) continue;
    const Matrix zi = gather_cols(z_new, new_members[c]);
    const Matrix zr = gather_cols(z_ref, ref_members[c]);
    acc += rate(hcat(zi, zr), cfg) - 0.5 * (rate(zi, cfg) + rate(zr, cfg));
  }
  return acc;
}

// Gradient of subspace_similarity with respect to z_new; z_ref is a constant.
inline Matrix subspace_similarity_grad(const RepBatch& z_new, const RepBatch& z_ref,
                                       const Partition& class_of_new,
                                       const Partition& class_of_ref, const RateConfig& cfg) {
  detail::require_same_universe(z_new, z_ref, class_of_new, class_of_ref);
  const auto new_members = class_of_new.members();
  const auto ref_members = class_of_ref.members();
  Matrix g(z_new.rows(), z_new.cols());
  for (std::size_t c = 0; c < class_of_new.k; ++c) {
    const auto& cols = new_members[c];
    if (cols.empty() || ref_members[c].empty()) continue;
    const Matrix zi = gather_cols(z_new, cols);
    const Matrix zr = gather_cols(z_ref, ref_members[c]);
    const Matrix g_union = rate_grad(hcat(zi, zr), cfg);
    Matrix gi(zi.rows(), zi.cols());
    for (std::size_t r = 0; r < gi.rows(); ++r)
      for (std::size_t j = 0; j < gi.cols(); ++j) gi(r, j) = g_union(r, j);
    gi.axpy(-0.5, rate_grad(zi, cfg));
    detail::scatter_add_cols(g, gi, cols, 1.0);
  }
  return g;
}

// Column-wise projection onto the unit sphere. Norms are kept so the
// Jacobian can be applied during backpropagation.
struct NormalizedBatch {
  Matrix z;
  std::vector<double> norms;
};

inline constexpr double kNormFloor = 1e-12;

inline NormalizedBatch normalize_columns(const Matrix& x) {
  NormalizedBatch out{x, std::vector<double>(x.cols(), 0.0)};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) out.norms[c] += row[c] * row[c];
  }
  for (double& n : out.norms) n = std::max(std::sqrt(n), kNormFloor);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.z.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) row[c] /= out.norms[c];
  }
  return out;
}

// Pulls a gradient on the normalized columns back to the raw columns:
// dL/dx = (g - z (z^T g)) / |x|.
inline Matrix normalize_columns_backward(const NormalizedBatch& nb, const Matrix& grad) {
  if (grad.rows() != nb.z.rows() || grad.cols() != nb.z.cols()) {
    fail(ErrorCode::kShapeMismatch, "normalization gradient shape");
  }
  std::vector<double> dots(grad.cols(), 0.0);
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const auto zr = nb.z.row(r);
    const auto gr = grad.row(r);
    for (std::size_t c = 0; c < grad.cols(); ++c) dots[c] += zr[c] * gr[c];
  }
  Matrix out(grad.rows(), grad.cols());
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const auto zr = nb.z.row(r);
    const auto gr = grad.row(r);
    auto orow = out.row(r);
    for (std::size_t c = 0; c < grad.cols(); ++c) {
      orow[c] = (gr[c] - zr[c] * dots[c]) / nb.norms[c];
    }
  }
  return out;
}

}  // namespace rdfair

#endif  // RDFAIR_CODING_RATE_HPP_
