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

// Adversarial debiasing with coding-rate objectives.
//
// The discriminator D maps encoder representations z to z' and ascends
// dR(Z', P_g): it tries to make protected groups separable. The encoder phi
// ascends dR(Z, P_y) - beta * dR(Z', P_g) with D held fixed, so it stays
// discriminative for the target while starving D of protected information.
//
// Both z = phi(x) and z' = D(z) are projected onto the unit sphere before any
// coding-rate term is evaluated.

#ifndef RDFAIR_DEBIAS_TRAINER_HPP_
#define RDFAIR_DEBIAS_TRAINER_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"
#include "rdfair/coding_rate.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"
#include "rdfair/nn.hpp"

namespace rdfair {

struct DebiasConfig {
  double beta = 1.0;
  RateConfig rate;
  double lr_encoder = 1e-3;
  double lr_discriminator = 1e-3;
  std::size_t steps_per_epoch = 0;  // 0: one pass over the data per epoch
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t disc_steps_per_enc_step = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(beta >= 0.0)) fail(ErrorCode::kInvalidConfig, "beta must be >= 0");
    rate.validate();
    if (!(lr_encoder > 0.0)) fail(ErrorCode::kInvalidConfig, "lr_encoder must be > 0");
    if (!(lr_discriminator > 0.0)) fail(ErrorCode::kInvalidConfig, "lr_discriminator must be > 0");
    if (batch_size < 2) fail(ErrorCode::kInvalidConfig, "batch_size must be >= 2");
    if (disc_steps_per_enc_step < 1) {
      fail(ErrorCode::kInvalidConfig, "disc_steps_per_enc_step must be >= 1");
    }
  }
};

// Raw features with target (y) and protected (g) labels, one sample per
// column of x.
struct LabeledBatch {
  Matrix x;
  Partition y;
  Partition g;

  std::size_t size() const noexcept { return x.cols(); }

  void validate() const {
    if (y.size() != x.cols() || g.size() != x.cols()) {
      fail(ErrorCode::kPartitionMismatch, "feature, target and protected lengths differ");
    }
  }

  LabeledBatch subset(std::span<const std::size_t> idx) const {
    return {gather_cols(x, idx), y.subset(idx), g.subset(idx)};
  }
};

inline Matrix encode_normalized(const Network& phi, const Matrix& x) {
  return normalize_columns(phi.infer(x)).z;
}

struct DiscriminatorReport {
  double dr_g = 0.0;  // before the step
};

struct EncoderReport {
  double dr_y = 0.0;    // (a) dR(Z_new, P_y)
  double dr_g = 0.0;    // (b) dR(Z'_new, P_g)
  double term_c = 0.0;  // (c) retention of frozen exemplar subspaces
  double term_d = 0.0;  // (d) dR(Z'_old, P_g_old)
  double r_z = 0.0;     // R(Z_new)
  double r_old = 0.0;   // R(Z_old), 0 without exemplars
  double objective = 0.0;
};

struct TelemetryRecord {
  std::size_t iter = 0;
  EncoderReport enc;
  bool has_exemplars = false;

  nlohmann::json to_json() const {
    nlohmann::json j{{"iter", iter}, {"dR_y", enc.dr_y}, {"dR_g", enc.dr_g}, {"R_z", enc.r_z}};
    if (has_exemplars) {
      j["term_c"] = enc.term_c;
      j["term_d"] = enc.term_d;
      j["R_old"] = enc.r_old;
    }
    return j;
  }
};

namespace detail {

struct DiscPass {
  ForwardTrace trace;
  NormalizedBatch zp;
};

inline DiscPass run_discriminator(const Network& disc, const Matrix& z) {
  auto [raw, trace] = disc.forward(z);
  return {std::move(trace), normalize_columns(raw)};
}

// Gradient of dR(Z', P_g) with respect to the discriminator input z, or
// with respect to D's parameters, from one discriminator pass.
inline BackwardResult disc_backward(const Network& disc, const DiscPass& pass, const Partition& g,
                                    const RateConfig& rcfg) {
  const Matrix g_zp = delta_rate_grad(pass.zp.z, g, rcfg);
  return disc.backward(pass.trace, normalize_columns_backward(pass.zp, g_zp));
}

// Exemplar inputs to the encoder objective: raw exemplars, their frozen
// normalized representations and labels.
struct ReplayView {
  const Matrix* x = nullptr;
  const Matrix* z_frozen = nullptr;
  const Partition* y = nullptr;
  const Partition* g = nullptr;

  bool active() const { return x != nullptr && x->cols() > 0; }
};

struct ObjectiveWeights {
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
};

// Evaluates (a) - beta (b) - gamma (c) - eta (d) and its parameter gradient
// with respect to phi. Terms with zero weight are reported but contribute no
// gradient.
struct EncoderObjective {
  EncoderReport report;
  ParamGrads grads;
};

inline EncoderObjective encoder_objective(const Network& phi, const Network& disc,
                                          const LabeledBatch& batch, const ReplayView& replay,
                                          const ObjectiveWeights& w, const RateConfig& rcfg) {
  EncoderObjective out;
  auto [raw, trace] = phi.forward(batch.x);
  const NormalizedBatch z = normalize_columns(raw);

  out.report.dr_y = delta_rate(z.z, batch.y, rcfg);
  out.report.r_z = rate(z.z, rcfg);
  Matrix g_z = delta_rate_grad(z.z, batch.y, rcfg);

  const DiscPass dp = run_discriminator(disc, z.z);
  out.report.dr_g = delta_rate(dp.zp.z, batch.g, rcfg);
  if (w.beta != 0.0) {
    g_z.axpy(-w.beta, disc_backward(disc, dp, batch.g, rcfg).grad_in);
  }
  out.grads = phi.backward(trace, normalize_columns_backward(z, g_z)).params;

  if (replay.active()) {
    auto [raw_old, trace_old] = phi.forward(*replay.x);
    const NormalizedBatch z_old = normalize_columns(raw_old);
    out.report.r_old = rate(z_old.z, rcfg);
    out.report.term_c = subspace_similarity(z_old.z, *replay.z_frozen, *replay.y, *replay.y, rcfg);
    const DiscPass dp_old = run_discriminator(disc, z_old.z);
    out.report.term_d = delta_rate(dp_old.zp.z, *replay.g, rcfg);
    if (w.gamma != 0.0 || w.eta != 0.0) {
      Matrix g_old(z_old.z.rows(), z_old.z.cols());
      if (w.gamma != 0.0) {
        g_old.axpy(-w.gamma, subspace_similarity_grad(z_old.z, *replay.z_frozen, *replay.y,
                                                      *replay.y, rcfg));
      }
      if (w.eta != 0.0) {
        g_old.axpy(-w.eta, disc_backward(disc, dp_old, *replay.g, rcfg).grad_in);
      }
      accumulate(out.grads,
                 phi.backward(trace_old, normalize_columns_backward(z_old, g_old)).params, 1.0);
    }
  }
  out.report.objective = out.report.dr_y - w.beta * out.report.dr_g - w.gamma * out.report.term_c -
                         w.eta * out.report.term_d;
  return out;
}

}  // namespace detail

// Ascends dR(D(phi(x)), P_g) in D's parameters; phi is read only.
inline DiscriminatorReport discriminator_step(Network& disc, const Network& phi,
                                              const LabeledBatch& batch, const DebiasConfig& cfg) {
  batch.validate();
  if (phi.out_dim() != disc.in_dim()) {
    fail(ErrorCode::kShapeMismatch, "encoder output width does not match discriminator input");
  }
  const Matrix z = encode_normalized(phi, batch.x);
  const detail::DiscPass dp = detail::run_discriminator(disc, z);
  DiscriminatorReport report{delta_rate(dp.zp.z, batch.g, cfg.rate)};
  const BackwardResult back = detail::disc_backward(disc, dp, batch.g, cfg.rate);
  disc.adam_step(negated(back.params), AdamConfig{cfg.lr_discriminator});
  return report;
}

// Ascends dR(Z, P_y) - beta dR(Z', P_g) in phi's parameters; D is read only.
inline EncoderReport encoder_step(Network& phi, const Network& disc, const LabeledBatch& batch,
                                  const DebiasConfig& cfg) {
  batch.validate();
  if (phi.out_dim() != disc.in_dim()) {
    fail(ErrorCode::kShapeMismatch, "encoder output width does not match discriminator input");
  }
  auto obj = detail::encoder_objective(phi, disc, batch, {}, {cfg.beta, 0.0, 0.0}, cfg.rate);
  phi.adam_step(negated(std::move(obj.grads)), AdamConfig{cfg.lr_encoder});
  return obj.report;
}

// Epoch orderings in which every batch mixes target classes: per-class
// shuffles are interleaved round-robin, then cut into batches. A trailing
// batch shorter than half the batch size is merged into its predecessor.
class StratifiedBatcher {
 public:
  StratifiedBatcher(const Partition& y, std::size_t batch_size)
      : members_(y.members()), batch_size_(batch_size) {
    std::erase_if(members_, [](const auto& m) { return m.empty(); });
    for (const auto& m : members_) total_ += m.size();
  }

  std::size_t total() const noexcept { return total_; }

  std::size_t batches_per_epoch() const {
    return std::max<std::size_t>(1, (total_ + batch_size_ / 2) / batch_size_);
  }

  std::vector<std::vector<std::size_t>> epoch(std::mt19937_64& rng) const {
    auto lists = members_;
    for (auto& l : lists) std::shuffle(l.begin(), l.end(), rng);
    std::vector<std::size_t> order;
    order.reserve(total_);
    for (std::size_t pos = 0; order.size() < total_; ++pos) {
      for (const auto& l : lists) {
        if (pos < l.size()) order.push_back(l[pos]);
      }
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size_) {
      const std::size_t end = std::min(order.size(), start + batch_size_);
      if (!batches.empty() && end - start < batch_size_ / 2) {
        batches.back().insert(batches.back().end(), order.begin() + start, order.begin() + end);
      } else {
        batches.emplace_back(order.begin() + start, order.begin() + end);
      }
    }
    return batches;
  }

 private:
  std::vector<std::vector<std::size_t>> members_;
  std::size_t batch_size_;
  std::size_t total_ = 0;
};

namespace detail {

struct LoopOptions {
  ObjectiveWeights weights;
  ReplayView replay;
  bool disc_on_exemplars = false;
  std::size_t first_iter = 0;
};

// The alternating schedule shared by joint and staged training:
// disc_steps_per_enc_step discriminator ascents, then one encoder ascent.
inline std::vector<TelemetryRecord> alternating_loop(Network& phi, Network& disc,
                                                     const LabeledBatch& data,
                                                     const DebiasConfig& cfg,
                                                     const LoopOptions& opt) {
  std::vector<TelemetryRecord> telemetry;
  if (cfg.epochs == 0) return telemetry;
  std::mt19937_64 rng(cfg.seed);
  const StratifiedBatcher batcher(data.y, cfg.batch_size);
  const std::size_t steps =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : batcher.batches_per_epoch();
  std::size_t iter = opt.first_iter;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = batcher.epoch(rng);
    for (std::size_t s = 0; s < steps; ++s) {
      const LabeledBatch batch = data.subset(batches[s % batches.size()]);
      LabeledBatch disc_batch;
      const bool mix = opt.disc_on_exemplars && opt.replay.active();
      if (mix) {
        disc_batch.x = hcat(batch.x, *opt.replay.x);
        disc_batch.g = batch.g;
        disc_batch.g.labels.insert(disc_batch.g.labels.end(), opt.replay.g->labels.begin(),
                                   opt.replay.g->labels.end());
        disc_batch.y = batch.y;
        disc_batch.y.labels.insert(disc_batch.y.labels.end(), opt.replay.y->labels.begin(),
                                   opt.replay.y->labels.end());
      }
      for (std::size_t k = 0; k < cfg.disc_steps_per_enc_step; ++k) {
        discriminator_step(disc, phi, mix ? disc_batch : batch, cfg);
      }
      auto obj = encoder_objective(phi, disc, batch, opt.replay, opt.weights, cfg.rate);
      phi.adam_step(negated(std::move(obj.grads)), AdamConfig{cfg.lr_encoder});
      telemetry.push_back({iter++, obj.report, opt.replay.active()});
    }
  }
  return telemetry;
}

}  // namespace detail

// Joint (single-stage) adversarial training. Returns one telemetry record per
// encoder step.
inline std::vector<TelemetryRecord> train_debias(Network& phi, Network& disc,
                                                 const LabeledBatch& dataset,
                                                 const DebiasConfig& cfg) {
  cfg.validate();
  dataset.validate();
  if (dataset.size() == 0) fail(ErrorCode::kEmptyDataset, "no training samples");
  detail::LoopOptions opt;
  opt.weights = {cfg.beta, 0.0, 0.0};
  return detail::alternating_loop(phi, disc, dataset, cfg, opt);
}

}  // namespace rdfair

#endif  // RDFAIR_DEBIAS_TRAINER_HPP_
