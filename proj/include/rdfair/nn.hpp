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

// A small fully-connected network stack with explicit backpropagation.
// Activations flow as d x n matrices (one sample per column), matching the
// representation layout of the coding-rate objectives, so an external
// gradient on the output batch can be pushed straight through backward().

#ifndef RDFAIR_NN_HPP_
#define RDFAIR_NN_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"

namespace rdfair {

enum class LayerKind { kLinear, kRelu, kTanh };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kLinear: return "linear";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kTanh: return "tanh";
  }
  return "?";
}

inline LayerKind parse_layer_kind(const std::string& s) {
  if (s == "linear") return LayerKind::kLinear;
  if (s == "relu") return LayerKind::kRelu;
  if (s == "tanh") return LayerKind::kTanh;
  fail(ErrorCode::kParseError, "unknown layer kind '" + s + "'");
}

struct LayerSpec {
  LayerKind kind = LayerKind::kLinear;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Per-layer parameter tensors. Nonlinear layers carry empty matrices so that
// indices line up with the layer list.
struct ParamGrads {
  std::vector<Matrix> weight;
  std::vector<Matrix> bias;
};

struct ForwardTrace {
  std::vector<Matrix> inputs;  // input activation of each layer
  std::vector<LayerSpec> specs;
};

struct BackwardResult {
  ParamGrads params;
  Matrix grad_in;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Network {
 public:
  Network() = default;

  // Kaiming-uniform fan-in initialization for linear layers.
  Network(std::vector<LayerSpec> specs, std::uint64_t seed) : specs_(std::move(specs)) {
    validate_chain();
    std::mt19937_64 rng(seed);
    weights_.resize(specs_.size());
    biases_.resize(specs_.size());
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& s = specs_[i];
      if (s.kind != LayerKind::kLinear) continue;
      const double fan_in = static_cast<double>(s.in_dim);
      const double wb = std::sqrt(6.0 / fan_in);
      const double bb = 1.0 / std::sqrt(fan_in);
      std::uniform_real_distribution<double> wdist(-wb, wb);
      std::uniform_real_distribution<double> bdist(-bb, bb);
      weights_[i] = Matrix(s.out_dim, s.in_dim);
      for (double& v : weights_[i].values()) v = wdist(rng);
      biases_[i] = Matrix(s.out_dim, 1);
      for (double& v : biases_[i].values()) v = bdist(rng);
    }
    reset_optimizer();
  }

  // dims = {in, h1, ..., out}: linear layers joined by `activation`, no
  // activation after the last linear layer.
  static Network mlp(const std::vector<std::size_t>& dims, std::uint64_t seed,
                     LayerKind activation = LayerKind::kRelu) {
    if (dims.size() < 2) fail(ErrorCode::kShapeMismatch, "an MLP needs at least in and out dims");
    std::vector<LayerSpec> specs;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      specs.push_back({LayerKind::kLinear, dims[i], dims[i + 1]});
      if (i + 2 < dims.size()) specs.push_back({activation, dims[i + 1], dims[i + 1]});
    }
    return Network(std::move(specs), seed);
  }

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::size_t in_dim() const { return specs_.front().in_dim; }
  std::size_t out_dim() const { return specs_.back().out_dim; }
  std::size_t layer_count() const noexcept { return specs_.size(); }
  const LayerSpec& spec(std::size_t i) const { return specs_.at(i); }

  Matrix& weight(std::size_t layer) { return weights_.at(layer); }
  const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }
  Matrix& bias(std::size_t layer) { return biases_.at(layer); }
  const Matrix& bias(std::size_t layer) const { return biases_.at(layer); }
  std::uint64_t adam_steps() const noexcept { return step_; }

  std::pair<Matrix, ForwardTrace> forward(const Matrix& x) const {
    check_input(x);
    ForwardTrace trace;
    trace.specs = specs_;
    trace.inputs.reserve(specs_.size());
    Matrix a = x;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      trace.inputs.push_back(a);
      a = apply_layer(i, a);
    }
    return {std::move(a), std::move(trace)};
  }

  // Forward pass without retaining activations.
  Matrix infer(const Matrix& x) const {
    check_input(x);
    Matrix a = x;
    for (std::size_t i = 0; i < specs_.size(); ++i) a = apply_layer(i, a);
    return a;
  }

  BackwardResult backward(const ForwardTrace& trace, const Matrix& grad_out) const {
    if (trace.specs != specs_ || trace.inputs.size() != specs_.size()) {
      fail(ErrorCode::kStaleTrace, "trace was recorded for a different architecture");
    }
    const std::size_t n = trace.inputs.front().cols();
    if (grad_out.rows() != out_dim() || grad_out.cols() != n) {
      fail(ErrorCode::kShapeMismatch, "grad_out shape does not match forward output");
    }
    BackwardResult out;
    out.params.weight.resize(specs_.size());
    out.params.bias.resize(specs_.size());
    Matrix g = grad_out;
    for (std::size_t ii = specs_.size(); ii-- > 0;) {
      const Matrix& in = trace.inputs[ii];
      switch (specs_[ii].kind) {
        case LayerKind::kLinear: {
          out.params.weight[ii] = matmul_nt(g, in);
          Matrix gb(g.rows(), 1);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            double acc = 0.0;
            for (double v : g.row(r)) acc += v;
            gb(r, 0) = acc;
          }
          out.params.bias[ii] = std::move(gb);
          g = matmul_tn(weights_[ii], g);
          break;
        }
        case LayerKind::kRelu: {
          auto gv = g.values();
          const auto iv = in.values();
          for (std::size_t k = 0; k < gv.size(); ++k) {
            if (!(iv[k] > 0.0)) gv[k] = 0.0;
          }
          break;
        }
        case LayerKind::kTanh: {
          auto gv = g.values();
          const auto iv = in.values();
          for (std::size_t k = 0; k < gv.size(); ++k) {
            const double t = std::tanh(iv[k]);
            gv[k] *= 1.0 - t * t;
          }
          break;
        }
      }
    }
    out.grad_in = std::move(g);
    return out;
  }

  // One bias-corrected Adam update that DEScends the supplied gradients.
  void adam_step(const ParamGrads& grads, const AdamConfig& cfg) {
    if (grads.weight.size() != specs_.size() || grads.bias.size() != specs_.size()) {
      fail(ErrorCode::kShapeMismatch, "gradient list does not match layer count");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      if (specs_[i].kind != LayerKind::kLinear) continue;
      update(weights_[i], m_w_[i], v_w_[i], grads.weight[i], cfg, c1, c2);
      update(biases_[i], m_b_[i], v_b_[i], grads.bias[i], cfg, c1, c2);
    }
  }

  void reset_optimizer() {
    step_ = 0;
    m_w_.assign(specs_.size(), Matrix());
    v_w_.assign(specs_.size(), Matrix());
    m_b_.assign(specs_.size(), Matrix());
    v_b_.assign(specs_.size(), Matrix());
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      if (specs_[i].kind != LayerKind::kLinear) continue;
      m_w_[i] = v_w_[i] = Matrix(weights_[i].rows(), weights_[i].cols());
      m_b_[i] = v_b_[i] = Matrix(biases_[i].rows(), biases_[i].cols());
    }
  }

  friend bool operator==(const Network&, const Network&) = default;

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);

 private:
  void validate_chain() const {
    if (specs_.empty()) fail(ErrorCode::kShapeMismatch, "network has no layers");
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& s = specs_[i];
      if (s.in_dim == 0 || s.out_dim == 0) fail(ErrorCode::kShapeMismatch, "zero layer width");
      if (s.kind != LayerKind::kLinear && s.in_dim != s.out_dim) {
        fail(ErrorCode::kShapeMismatch, "nonlinearity must preserve width");
      }
      if (i > 0 && specs_[i - 1].out_dim != s.in_dim) {
        fail(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " does not chain");
      }
    }
  }

  void check_input(const Matrix& x) const {
    if (specs_.empty()) fail(ErrorCode::kShapeMismatch, "network has no layers");
    if (x.rows() != in_dim()) {
      fail(ErrorCode::kShapeMismatch, "input has " + std::to_string(x.rows()) +
                                          " rows, network expects " + std::to_string(in_dim()));
    }
  }

  Matrix apply_layer(std::size_t i, const Matrix& a) const {
    switch (specs_[i].kind) {
      case LayerKind::kLinear: {
        Matrix y = matmul(weights_[i], a);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          const double b = biases_[i](r, 0);
          for (double& v : y.row(r)) v += b;
        }
        return y;
      }
      case LayerKind::kRelu: {
        Matrix y = a;
        for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
        return y;
      }
      case LayerKind::kTanh: {
        Matrix y = a;
        for (double& v : y.values()) v = std::tanh(v);
        return y;
      }
    }
    return a;
  }

  static void update(Matrix& p, Matrix& m, Matrix& v, const Matrix& g, const AdamConfig& cfg,
                     double c1, double c2) {
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      fail(ErrorCode::kShapeMismatch, "gradient shape does not match parameter");
    }
    auto pv = p.values();
    auto mv = m.values();
    auto vv = v.values();
    const auto gv = g.values();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      mv[k] = cfg.beta1 * mv[k] + (1.0 - cfg.beta1) * gv[k];
      vv[k] = cfg.beta2 * vv[k] + (1.0 - cfg.beta2) * gv[k] * gv[k];
      const double mhat = mv[k] / c1;
      const double vhat = vv[k] / c2;
      pv[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }

  std::vector<LayerSpec> specs_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;
  std::vector<Matrix> m_w_, v_w_, m_b_, v_b_;
  std::uint64_t step_ = 0;
};

inline ParamGrads negated(ParamGrads g) {
  for (auto& m : g.weight) m *= -1.0;
  for (auto& m : g.bias) m *= -1.0;
  return g;
}

// a += s * b, layer by layer. Empty entries (nonlinear layers) are skipped.
inline void accumulate(ParamGrads& a, const ParamGrads& b, double s) {
  for (std::size_t i = 0; i < a.weight.size(); ++i) {
    if (!a.weight[i].empty()) a.weight[i].axpy(s, b.weight[i]);
    if (!a.bias[i].empty()) a.bias[i].axpy(s, b.bias[i]);
  }
}

// Mean softmax cross-entropy over the columns of `logits` and its gradient.
struct SoftmaxLoss {
  double loss = 0.0;
  Matrix grad;
};

inline SoftmaxLoss softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> target) {
  if (target.size() != logits.cols()) fail(ErrorCode::kShapeMismatch, "target count");
  const std::size_t k = logits.rows();
  const std::size_t n = logits.cols();
  SoftmaxLoss out{0.0, Matrix(k, n)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < n; ++c) {
    double mx = logits(0, c);
    for (std::size_t r = 1; r < k; ++r) mx = std::max(mx, logits(r, c));
    double z = 0.0;
    for (std::size_t r = 0; r < k; ++r) z += std::exp(logits(r, c) - mx);
    const double log_z = mx + std::log(z);
    out.loss -= (logits(target[c], c) - log_z) * inv_n;
    for (std::size_t r = 0; r < k; ++r) {
      const double p = std::exp(logits(r, c) - log_z);
      out.grad(r, c) = (p - (r == target[c] ? 1.0 : 0.0)) * inv_n;
    }
  }
  return out;
}

inline std::vector<std::size_t> argmax_cols(const Matrix& logits) {
  std::vector<std::size_t> out(logits.cols(), 0);
  for (std::size_t c = 0; c < logits.cols(); ++c) {
    for (std::size_t r = 1; r < logits.rows(); ++r) {
      if (logits(r, c) > logits(out[c], c)) out[c] = r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: a JSON object with a magic string and integer version.
//
//   { "magic": "rdfair-network", "version": 1,
//     "layers": [{"kind": "linear", "in": 4, "out": 8}, ...],
//     "weights": [[row-major values] | null, ...],
//     "biases":  [[values] | null, ...],
//     "adam": {"step": t, "m_w": [...], "v_w": [...], "m_b": [...], "v_b": [...]} }
//
// Doubles are written in shortest round-trip form, so a load restores the
// parameters bit-exactly.

inline constexpr const char* kNetworkMagic = "rdfair-network";
inline constexpr int kNetworkFormatVersion = 1;

namespace detail {

inline nlohmann::json values_or_null(const Matrix& m) {
  if (m.empty()) return nullptr;
  return std::vector<double>(m.values().begin(), m.values().end());
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  if (j.is_null()) return Matrix();
  auto v = j.get<std::vector<double>>();
  if (v.size() != rows * cols) fail(ErrorCode::kShapeMismatch, "checkpoint tensor size");
  return Matrix(rows, cols, std::move(v));
}

}  // namespace detail

inline nlohmann::json Network::to_json() const {
  nlohmann::json j;
  j["magic"] = kNetworkMagic;
  j["version"] = kNetworkFormatVersion;
  auto& layers = j["layers"] = nlohmann::json::array();
  auto& w = j["weights"] = nlohmann::json::array();
  auto& b = j["biases"] = nlohmann::json::array();
  nlohmann::json adam;
  adam["step"] = step_;
  adam["m_w"] = adam["v_w"] = adam["m_b"] = adam["v_b"] = nlohmann::json::array();
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    layers.push_back({{"kind", layer_kind_name(specs_[i].kind)},
                      {"in", specs_[i].in_dim},
                      {"out", specs_[i].out_dim}});
    w.push_back(detail::values_or_null(weights_[i]));
    b.push_back(detail::values_or_null(biases_[i]));
    adam["m_w"].push_back(detail::values_or_null(m_w_[i]));
    adam["v_w"].push_back(detail::values_or_null(v_w_[i]));
    adam["m_b"].push_back(detail::values_or_null(m_b_[i]));
    adam["v_b"].push_back(detail::values_or_null(v_b_[i]));
  }
  j["adam"] = std::move(adam);
  return j;
}

inline Network Network::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("magic", "") != kNetworkMagic) {
    fail(ErrorCode::kBadMagic, "not a network checkpoint");
  }
  if (j.value("version", -1) != kNetworkFormatVersion) {
    fail(ErrorCode::kUnsupportedDtype, "unsupported checkpoint version");
  }
  Network net;
  for (const auto& l : j.at("layers")) {
    net.specs_.push_back({parse_layer_kind(l.at("kind").get<std::string>()),
                          l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>()});
  }
  net.validate_chain();
  const std::size_t n = net.specs_.size();
  net.weights_.resize(n);
  net.biases_.resize(n);
  net.m_w_.resize(n);
  net.v_w_.resize(n);
  net.m_b_.resize(n);
  net.v_b_.resize(n);
  const auto& adam = j.at("adam");
  net.step_ = adam.at("step").get<std::uint64_t>();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = net.specs_[i];
    if (s.kind != LayerKind::kLinear) continue;
    net.weights_[i] = detail::matrix_from_json(j.at("weights").at(i), s.out_dim, s.in_dim);
    net.biases_[i] = detail::matrix_from_json(j.at("biases").at(i), s.out_dim, 1);
    net.m_w_[i] = detail::matrix_from_json(adam.at("m_w").at(i), s.out_dim, s.in_dim);
    net.v_w_[i] = detail::matrix_from_json(adam.at("v_w").at(i), s.out_dim, s.in_dim);
    net.m_b_[i] = detail::matrix_from_json(adam.at("m_b").at(i), s.out_dim, 1);
    net.v_b_[i] = detail::matrix_from_json(adam.at("v_b").at(i), s.out_dim, 1);
  }
  return net;
}

inline void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << net.to_json().dump() << '\n';
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("checkpoint: ") + e.what());
  }
  return Network::from_json(j);
}

}  // namespace rdfair

#endif  // RDFAIR_NN_HPP_
