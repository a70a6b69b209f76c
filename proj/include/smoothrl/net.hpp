#pragma once
// Minimal fully-connected network: forward evaluation, exact reverse-mode
// gradients with respect to parameters and inputs, Adam, and versioned JSON
// persistence. ReLU hidden layers; linear or tanh-scaled output head.
// All arithmetic is double precision through the kernels module.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smoothrl/rng.hpp"

namespace smoothrl {

enum class OutputHead { Linear, TanhScaled };

struct MlpNet {
  std::vector<int> dims;  // input, hidden..., output
  OutputHead head = OutputHead::Linear;
  double head_lo = -1.0, head_hi = 1.0;  // action box for TanhScaled
  // Layer l maps dims[l] -> dims[l+1]; weights row-major (out x in).
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t layer_count() const { return weights.size(); }

  static MlpNet zeros(std::vector<int> dims, OutputHead head = OutputHead::Linear,
                      double lo = -1.0, double hi = 1.0);
  // Uniform He-style fan-in init: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0.
  static MlpNet he_uniform(std::vector<int> dims, Rng& rng,
                           OutputHead head = OutputHead::Linear,
                           double lo = -1.0, double hi = 1.0);

  bool all_finite() const;
};

// Per-evaluation scratch; reuse across calls to avoid reallocation.
struct ForwardTrace {
  std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
  std::vector<std::vector<double>> pre;  // pre-activation per layer
};

// Deterministic evaluation; throws DimMismatch on a wrong input size.
std::vector<double> forward(const MlpNet& net, std::span<const double> x);
const std::vector<double>& forward(const MlpNet& net, std::span<const double> x,
                                   ForwardTrace& trace);

struct GradBundle {
  std::vector<std::vector<double>> d_weights;
  std::vector<std::vector<double>> d_biases;
  std::vector<double> d_input;

  static GradBundle zeros_like(const MlpNet& net);
  void scale(double s);
  bool all_finite() const;
};

// Gradients of <upstream, forward(net, x)> w.r.t. parameters and input.
GradBundle backward(const MlpNet& net, std::span<const double> x,
                    std::span<const double> upstream);
// Accumulating form over a previously computed trace (for minibatches).
void backward_accumulate(const MlpNet& net, const ForwardTrace& trace,
                         std::span<const double> upstream, GradBundle& into);

struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
};

// One Adam step in place; throws NonFiniteGradient on NaN/Inf gradients.
void adam_update(MlpNet& net, const GradBundle& grads, double lr, AdamState& state);

// Versioned JSON persistence; round-trips bit-exactly.
std::string net_to_json(const MlpNet& net);
MlpNet net_from_json(const std::string& text);
void save_net(const MlpNet& net, const std::string& path);
MlpNet load_net(const std::string& path);

}  // namespace smoothrl
