/*
 * Copyright 2026 The palign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PALIGN_MODEL_HPP_
#define PALIGN_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "palign/error.hpp"
#include "palign/image.hpp"

namespace palign {

enum class Architecture : std::uint32_t { kLinearSoftmax = 0, kMlp1h = 1 };
enum class Activation : std::uint32_t { kRelu = 0, kTanh = 1 };

inline const char* to_string(Architecture a) {
  return a == Architecture::kLinearSoftmax ? "linear" : "mlp";
}
inline const char* to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

struct ModelSpec {
  Architecture architecture = Architecture::kMlp1h;
  std::size_t input_size = 0;
  std::size_t hidden_size = 32;
  Activation activation = Activation::kRelu;
  std::size_t classes = 2;

  bool operator==(const ModelSpec&) const = default;
};

// Affine layer y = W x + b, W stored row-major (outputs x inputs).
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;
  std::vector<double> velocity_weight;
  std::vector<double> velocity_bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out)
      : inputs(in),
        outputs(out),
        weight(in * out, 0.0),
        bias(out, 0.0),
        grad_weight(in * out, 0.0),
        grad_bias(out, 0.0),
        velocity_weight(in * out, 0.0),
        velocity_bias(out, 0.0) {}

  double w(std::size_t o, std::size_t i) const { return weight[o * inputs + i]; }
};

// Parameters, gradient accumulators and momentum buffers of a classifier.
// Layers run input -> output; the last layer produces the logits and every
// earlier layer is followed by the hidden activation. The first layer sees
// x - input_shift (a fixed per-channel offset, empty for none).
struct ModelState {
  ModelSpec spec;
  std::vector<DenseLayer> layers;
  std::vector<double> input_shift;

  std::size_t input_size() const { return spec.input_size; }
  std::size_t classes() const { return spec.classes; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  struct ParameterView {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
  };
  std::vector<ParameterView> parameters() {
    std::vector<ParameterView> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto& l = layers[i];
      out.push_back({"layer" + std::to_string(i) + ".weight", l.weight, l.grad_weight});
      out.push_back({"layer" + std::to_string(i) + ".bias", l.bias, l.grad_bias});
    }
    return out;
  }

  std::vector<double> flat_parameters() const {
    std::vector<double> out;
    for (const auto& l : layers) {
      out.insert(out.end(), l.weight.begin(), l.weight.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
  }
  std::vector<double> flat_gradients() const {
    std::vector<double> out;
    for (const auto& l : layers) {
      out.insert(out.end(), l.grad_weight.begin(), l.grad_weight.end());
      out.insert(out.end(), l.grad_bias.begin(), l.grad_bias.end());
    }
    return out;
  }

  void zero_gradients() {
    for (auto& l : layers) {
      std::fill(l.grad_weight.begin(), l.grad_weight.end(), 0.0);
      std::fill(l.grad_bias.begin(), l.grad_bias.end(), 0.0);
    }
  }
};

// Builds a model with all parameters zero.
inline ModelState make_model(const ModelSpec& spec) {
  if (spec.input_size == 0) throw ConfigError("model input size must be positive");
  if (spec.classes < 2) throw ConfigError("model needs at least two classes");
  ModelState m;
  m.spec = spec;
  if (spec.architecture == Architecture::kLinearSoftmax) {
    m.layers.emplace_back(spec.input_size, spec.classes);
  } else {
    if (spec.hidden_size == 0) throw ConfigError("hidden size must be positive");
    m.layers.emplace_back(spec.input_size, spec.hidden_size);
    m.layers.emplace_back(spec.hidden_size, spec.classes);
  }
  return m;
}

// Weights ~ U[-a, a], a = sqrt(6 / (fan_in + fan_out)); biases zero.
inline ModelState init_model(const ModelSpec& spec, std::uint64_t seed) {
  ModelState m = make_model(spec);
  std::mt19937_64 rng(seed);
  for (auto& l : m.layers) {
    const double a = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    std::uniform_real_distribution<double> dist(-a, a);
    for (auto& w : l.weight) w = dist(rng);
  }
  return m;
}

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probabilities;

  std::size_t argmax() const {
    return static_cast<std::size_t>(
        std::max_element(probabilities.begin(), probabilities.end()) -
        probabilities.begin());
  }
  double confidence() const {
    return *std::max_element(probabilities.begin(), probabilities.end());
  }
};

namespace detail {

// ReLU passes NaN through so a corrupted parameter cannot be silently masked.
inline double activate(Activation a, double x) {
  if (a == Activation::kRelu) return x > 0.0 || std::isnan(x) ? x : 0.0;
  return std::tanh(x);
}
// ReLU derivative at exactly 0 is taken as 0.
inline double activate_d1(Activation a, double x) {
  if (a == Activation::kRelu) return x > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
inline double activate_d2(Activation a, double x) {
  if (a == Activation::kRelu) return 0.0;
  const double t = std::tanh(x);
  return -2.0 * t * (1.0 - t * t);
}

inline void affine(const DenseLayer& l, std::span<const double> in,
                   std::vector<double>& out) {
  out.assign(l.bias.begin(), l.bias.end());
  for (std::size_t o = 0; o < l.outputs; ++o) {
    const double* row = l.weight.data() + o * l.inputs;
    double acc = 0.0;
    for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * in[i];
    out[o] += acc;
  }
}

// y = W^T v
inline std::vector<double> transpose_apply(const DenseLayer& l,
                                           std::span<const double> v) {
  std::vector<double> y(l.inputs, 0.0);
  for (std::size_t o = 0; o < l.outputs; ++o) {
    const double s = v[o];
    if (s == 0.0) continue;
    const double* row = l.weight.data() + o * l.inputs;
    for (std::size_t i = 0; i < l.inputs; ++i) y[i] += s * row[i];
  }
  return y;
}

// y = W v, v of length inputs
inline std::vector<double> apply(const DenseLayer& l, std::span<const double> v) {
  std::vector<double> y(l.outputs, 0.0);
  for (std::size_t o = 0; o < l.outputs; ++o) {
    const double* row = l.weight.data() + o * l.inputs;
    double acc = 0.0;
    for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * v[i];
    y[o] = acc;
  }
  return y;
}

// grad_W += outer(rows, cols)
inline void add_outer(std::vector<double>& grad, std::span<const double> rows,
                      std::span<const double> cols, std::size_t n_cols) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double s = rows[r];
    if (s == 0.0) continue;
    double* g = grad.data() + r * n_cols;
    for (std::size_t c = 0; c < n_cols; ++c) g[c] += s * cols[c];
  }
}

}  // namespace detail

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

// All intermediate values of one forward pass.
struct ForwardTrace {
  std::vector<double> input;              // shifted input fed to layer 0
  std::vector<std::vector<double>> pre;   // pre-activation of every layer
  std::vector<std::vector<double>> post;  // activation of every hidden layer
  std::vector<double> probabilities;

  const std::vector<double>& logits() const { return pre.back(); }
};

inline void check_input(const ModelState& state, std::size_t n) {
  if (n != state.input_size()) {
    throw ShapeError("model expects " + std::to_string(state.input_size()) +
                     " inputs, got " + std::to_string(n));
  }
}

inline ForwardTrace forward_trace(const ModelState& state,
                                  std::span<const double> x) {
  check_input(state, x.size());
  ForwardTrace t;
  t.input.assign(x.begin(), x.end());
  if (const std::size_t channels = state.input_shift.size(); channels > 0) {
    for (std::size_t i = 0; i < t.input.size(); ++i) {
      t.input[i] -= state.input_shift[i % channels];
    }
  }
  t.pre.resize(state.layers.size());
  t.post.resize(state.layers.size() - 1);
  std::span<const double> in = t.input;
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    detail::affine(state.layers[l], in, t.pre[l]);
    if (l + 1 < state.layers.size()) {
      t.post[l].resize(t.pre[l].size());
      for (std::size_t j = 0; j < t.pre[l].size(); ++j) {
        t.post[l][j] = detail::activate(state.spec.activation, t.pre[l][j]);
      }
      in = t.post[l];
    }
  }
  t.probabilities = softmax(t.pre.back());
  return t;
}

inline Prediction forward(const ModelState& state, std::span<const double> x) {
  ForwardTrace t = forward_trace(state, x);
  return {std::move(t.pre.back()), std::move(t.probabilities)};
}
inline Prediction forward(const ModelState& state, const Image& x) {
  return forward(state, x.flat());
}

// Backpropagates `upstream` = dL/dlogits through a recorded forward pass and
// adds the parameter gradients to the accumulators.
inline void backward_params(ModelState& state, const ForwardTrace& trace,
                            std::span<const double> upstream) {
  if (upstream.size() != state.classes()) {
    throw ShapeError("upstream gradient has " + std::to_string(upstream.size()) +
                     " entries, model has " + std::to_string(state.classes()) +
                     " classes");
  }
  if (std::all_of(upstream.begin(), upstream.end(),
                  [](double v) { return v == 0.0; })) {
    return;
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = state.layers.size(); l-- > 0;) {
    DenseLayer& layer = state.layers[l];
    std::span<const double> in =
        l == 0 ? std::span<const double>(trace.input) : std::span<const double>(trace.post[l - 1]);
    detail::add_outer(layer.grad_weight, delta, in, layer.inputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) layer.grad_bias[o] += delta[o];
    if (l == 0) break;
    std::vector<double> back = detail::transpose_apply(layer, delta);
    for (std::size_t j = 0; j < back.size(); ++j) {
      back[j] *= detail::activate_d1(state.spec.activation, trace.pre[l - 1][j]);
    }
    delta = std::move(back);
  }
}

inline void backward_params(ModelState& state, std::span<const double> x,
                            std::span<const double> upstream) {
  backward_params(state, forward_trace(state, x), upstream);
}

// Scalar read-out whose input gradient is requested.
struct ScalarHead {
  enum class Kind { kLogProbOf, kSumLogProbs };
  Kind kind = Kind::kSumLogProbs;
  std::size_t target = 0;

  static ScalarHead log_prob_of(std::size_t c) { return {Kind::kLogProbOf, c}; }
  static ScalarHead sum_log_probs() { return {Kind::kSumLogProbs, 0}; }
};

namespace detail {

// d(head)/d(logits) = e - w p, with e = onehot(c), w = 1 for log p_c and
// e = 1, w = K for sum_c log p_c.
inline std::vector<double> head_logit_grad(const ScalarHead& head,
                                           std::span<const double> p,
                                           double& weight) {
  std::vector<double> u(p.size());
  if (head.kind == ScalarHead::Kind::kLogProbOf) {
    weight = 1.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      u[c] = (c == head.target ? 1.0 : 0.0) - p[c];
    }
  } else {
    weight = static_cast<double>(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) u[c] = 1.0 - weight * p[c];
  }
  return u;
}

// Backward from logits to input. Returns per-layer deltas (dS/da_l) in
// `deltas` and the input gradient.
inline std::vector<double> input_backward(const ModelState& state,
                                          const ForwardTrace& trace,
                                          std::span<const double> upstream,
                                          std::vector<std::vector<double>>* deltas) {
  const std::size_t n = state.layers.size();
  std::vector<std::vector<double>> beta(n);
  beta[n - 1].assign(upstream.begin(), upstream.end());
  for (std::size_t l = n - 1; l > 0; --l) {
    std::vector<double> g = transpose_apply(state.layers[l], beta[l]);
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] *= activate_d1(state.spec.activation, trace.pre[l - 1][j]);
    }
    beta[l - 1] = std::move(g);
  }
  std::vector<double> grad = transpose_apply(state.layers[0], beta[0]);
  if (deltas) *deltas = std::move(beta);
  return grad;
}

}  // namespace detail

inline std::vector<double> input_gradient(const ModelState& state,
                                          std::span<const double> x,
                                          const ScalarHead& head) {
  if (head.kind == ScalarHead::Kind::kLogProbOf && head.target >= state.classes()) {
    throw ContractError("head class " + std::to_string(head.target) +
                        " out of range");
  }
  const ForwardTrace trace = forward_trace(state, x);
  double w = 0.0;
  const std::vector<double> u = detail::head_logit_grad(head, trace.probabilities, w);
  return detail::input_backward(state, trace, u, nullptr);
}

inline Image input_gradient(const ModelState& state, const Image& x,
                            const ScalarHead& head) {
  return Image(x.shape, input_gradient(state, x.flat(), head));
}

// Penalty weight * sum_j m_j * g_j^2 with g = d(head)/dx and m a per-input
// weighting (1 outside the prior, 0 inside). Adds the exact parameter
// gradient of the penalty (a second-order reverse pass through the input
// gradient computation) and returns the penalty value.
inline double accumulate_input_gradient_penalty(ModelState& state,
                                                std::span<const double> x,
                                                std::span<const double> mask,
                                                const ScalarHead& head,
                                                double weight) {
  check_input(state, mask.size());
  const ForwardTrace trace = forward_trace(state, x);
  const std::size_t n = state.layers.size();
  const Activation act = state.spec.activation;
  double w_head = 0.0;
  const std::vector<double> u =
      detail::head_logit_grad(head, trace.probabilities, w_head);
  std::vector<std::vector<double>> beta;
  const std::vector<double> g = detail::input_backward(state, trace, u, &beta);

  double penalty = 0.0;
  std::vector<double> g_bar(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    penalty += mask[j] * g[j] * g[j];
    g_bar[j] = 2.0 * weight * mask[j] * g[j];
  }
  penalty *= weight;
  if (weight == 0.0 || penalty == 0.0) return penalty;

  // Reverse of g = W0^T beta0.
  detail::add_outer(state.layers[0].grad_weight, beta[0], g_bar,
                    state.layers[0].inputs);
  std::vector<double> beta_bar = detail::apply(state.layers[0], g_bar);

  // Extra adjoints on hidden pre-activations from the activation derivative.
  std::vector<std::vector<double>> extra(n);
  for (std::size_t l = 0; l + 1 < n; ++l) {
    // beta_l = gamma_l * act'(a_l), gamma_l = W_{l+1}^T beta_{l+1}
    const std::vector<double> gamma =
        detail::transpose_apply(state.layers[l + 1], beta[l + 1]);
    std::vector<double> gamma_bar(gamma.size());
    extra[l].resize(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      const double a = trace.pre[l][j];
      gamma_bar[j] = beta_bar[j] * detail::activate_d1(act, a);
      extra[l][j] = beta_bar[j] * gamma[j] * detail::activate_d2(act, a);
    }
    detail::add_outer(state.layers[l + 1].grad_weight, beta[l + 1], gamma_bar,
                      state.layers[l + 1].inputs);
    beta_bar = detail::apply(state.layers[l + 1], gamma_bar);
  }

  // beta_last = e - w p(z): dz = -w (diag(p) - p p^T) beta_bar
  const auto& p = trace.probabilities;
  double dot = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * beta_bar[c];
  std::vector<double> a_bar(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    a_bar[c] = -w_head * p[c] * (beta_bar[c] - dot);
  }

  // Ordinary reverse pass through the forward computation.
  for (std::size_t l = n; l-- > 0;) {
    DenseLayer& layer = state.layers[l];
    std::span<const double> in = l == 0 ? std::span<const double>(trace.input)
                                        : std::span<const double>(trace.post[l - 1]);
    detail::add_outer(layer.grad_weight, a_bar, in, layer.inputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) layer.grad_bias[o] += a_bar[o];
    if (l == 0) break;
    std::vector<double> h_bar = detail::transpose_apply(layer, a_bar);
    for (std::size_t j = 0; j < h_bar.size(); ++j) {
      h_bar[j] = h_bar[j] * detail::activate_d1(act, trace.pre[l - 1][j]) +
                 extra[l - 1][j];
    }
    a_bar = std::move(h_bar);
  }
  return penalty;
}

// Heavy-ball SGD: v <- momentum * v + g; theta <- theta - lr * v; g <- 0.
inline void sgd_step(ModelState& state, double learning_rate, double momentum) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    const auto& l = state.layers[i];
    for (double g : l.grad_weight) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in layer" + std::to_string(i) +
                            ".weight");
      }
    }
    for (double g : l.grad_bias) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in layer" + std::to_string(i) +
                            ".bias");
      }
    }
  }
  auto update = [&](std::vector<double>& value, std::vector<double>& grad,
                    std::vector<double>& velocity) {
    for (std::size_t j = 0; j < value.size(); ++j) {
      velocity[j] = momentum * velocity[j] + grad[j];
      value[j] -= learning_rate * velocity[j];
      grad[j] = 0.0;
    }
  };
  for (auto& l : state.layers) {
    update(l.weight, l.grad_weight, l.velocity_weight);
    update(l.bias, l.grad_bias, l.velocity_bias);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian):
//   char[8]  "PALGNCKP"
//   u32      format version (1)
//   u32      architecture, u32 activation
//   u64      input_size, hidden_size, classes
//   u32      input shift length, f64[length] input shift
//   u32      layer count
//   per layer: u64 outputs, u64 inputs, f64[outputs*inputs] weight, f64[outputs] bias
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'L', 'G', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
inline void write_doubles(std::ostream& os, std::span<const double> v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

// Sequential reader that reports the byte offset of any failure.
class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  void bytes(void* dst, std::size_t n, const char* what) {
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw LoadError(std::string("truncated input while reading ") + what,
                      offset_ + static_cast<std::uint64_t>(is_.gcount()));
    }
    offset_ += n;
  }
  template <typename T>
  T pod(const char* what) {
    T v{};
    bytes(&v, sizeof(T), what);
    return v;
  }
  void doubles(std::vector<double>& out, std::size_t n, const char* what) {
    out.resize(n);
    bytes(out.data(), n * sizeof(double), what);
  }
  std::uint64_t offset() const { return offset_; }
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const ModelState& state, std::ostream& os) {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod(os, kCheckpointVersion);
  detail::write_pod(os, static_cast<std::uint32_t>(state.spec.architecture));
  detail::write_pod(os, static_cast<std::uint32_t>(state.spec.activation));
  detail::write_pod(os, static_cast<std::uint64_t>(state.spec.input_size));
  detail::write_pod(os, static_cast<std::uint64_t>(state.spec.hidden_size));
  detail::write_pod(os, static_cast<std::uint64_t>(state.spec.classes));
  detail::write_pod(os, static_cast<std::uint32_t>(state.input_shift.size()));
  detail::write_doubles(os, state.input_shift);
  detail::write_pod(os, static_cast<std::uint32_t>(state.layers.size()));
  for (const auto& l : state.layers) {
    detail::write_pod(os, static_cast<std::uint64_t>(l.outputs));
    detail::write_pod(os, static_cast<std::uint64_t>(l.inputs));
    detail::write_doubles(os, l.weight);
    detail::write_doubles(os, l.bias);
  }
}

inline ModelState load_checkpoint(std::istream& is) {
  detail::Reader in(is);
  char magic[8];
  in.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw LoadError("not a palign checkpoint (bad magic)", 0);
  }
  const auto version = in.pod<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version),
                    in.offset() - 4);
  }
  ModelSpec spec;
  const auto arch = in.pod<std::uint32_t>("architecture");
  const auto act = in.pod<std::uint32_t>("activation");
  if (arch > 1 || act > 1) {
    throw LoadError("unknown architecture or activation tag", in.offset() - 8);
  }
  spec.architecture = static_cast<Architecture>(arch);
  spec.activation = static_cast<Activation>(act);
  spec.input_size = in.pod<std::uint64_t>("input size");
  spec.hidden_size = in.pod<std::uint64_t>("hidden size");
  spec.classes = in.pod<std::uint64_t>("classes");
  ModelState m;
  try {
    m = make_model(spec);
  } catch (const ConfigError& e) {
    throw LoadError(std::string("invalid model header: ") + e.what(), in.offset());
  }
  const auto shift_len = in.pod<std::uint32_t>("input shift length");
  if (shift_len != 0 && spec.input_size % shift_len != 0) {
    throw LoadError("input shift length does not divide the input size", in.offset() - 4);
  }
  in.doubles(m.input_shift, shift_len, "input shift");
  const auto n_layers = in.pod<std::uint32_t>("layer count");
  if (n_layers != m.layers.size()) {
    throw LoadError("layer count does not match architecture", in.offset() - 4);
  }
  for (auto& l : m.layers) {
    const auto outputs = in.pod<std::uint64_t>("layer outputs");
    const auto inputs = in.pod<std::uint64_t>("layer inputs");
    if (outputs != l.outputs || inputs != l.inputs) {
      throw LoadError("layer shape does not match header", in.offset() - 16);
    }
    in.doubles(l.weight, l.weight.size(), "weights");
    in.doubles(l.bias, l.bias.size(), "biases");
  }
  return m;
}

}  // namespace palign

#endif  // PALIGN_MODEL_HPP_
