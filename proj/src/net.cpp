#include "smoothrl/net.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "smoothrl/errors.hpp"
#include "smoothrl/kernels.hpp"

namespace smoothrl {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw BadConfig("MlpNet needs at least input and output dims");
  for (int d : dims)
    if (d < 1) throw BadConfig("MlpNet layer dims must be positive");
}

bool finite_vec(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

MlpNet MlpNet::zeros(std::vector<int> dims, OutputHead head, double lo, double hi) {
  check_dims(dims);
  MlpNet net;
  net.dims = std::move(dims);
  net.head = head;
  net.head_lo = lo;
  net.head_hi = hi;
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    net.weights.emplace_back(static_cast<std::size_t>(net.dims[l + 1]) * net.dims[l], 0.0);
    net.biases.emplace_back(net.dims[l + 1], 0.0);
  }
  return net;
}

MlpNet MlpNet::he_uniform(std::vector<int> dims, Rng& rng, OutputHead head,
                          double lo, double hi) {
  MlpNet net = zeros(std::move(dims), head, lo, hi);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / net.dims[l]);
    for (auto& w : net.weights[l]) w = rng.uniform(-bound, bound);
  }
  return net;
}

bool MlpNet::all_finite() const {
  for (const auto& w : weights)
    if (!finite_vec(w)) return false;
  for (const auto& b : biases)
    if (!finite_vec(b)) return false;
  return true;
}

const std::vector<double>& forward(const MlpNet& net, std::span<const double> x,
                                   ForwardTrace& trace) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw DimMismatch("forward: input size != net input dim");
  const std::size_t layers = net.layer_count();
  trace.act.resize(layers + 1);
  trace.pre.resize(layers);
  trace.act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = net.dims[l + 1], cols = net.dims[l];
    trace.pre[l].resize(rows);
    kernels::matvec(net.weights[l].data(), trace.act[l].data(), net.biases[l].data(),
                    trace.pre[l].data(), rows, cols);
    trace.act[l + 1].resize(rows);
    if (l + 1 < layers) {
      kernels::relu(trace.pre[l].data(), trace.act[l + 1].data(), rows);
    } else if (net.head == OutputHead::Linear) {
      trace.act[l + 1] = trace.pre[l];
    } else {
      const double c = 0.5 * (net.head_hi + net.head_lo);
      const double s = 0.5 * (net.head_hi - net.head_lo);
      for (std::size_t i = 0; i < rows; ++i)
        trace.act[l + 1][i] = c + s * std::tanh(trace.pre[l][i]);
    }
  }
  return trace.act[layers];
}

std::vector<double> forward(const MlpNet& net, std::span<const double> x) {
  ForwardTrace trace;
  return forward(net, x, trace);
}

GradBundle GradBundle::zeros_like(const MlpNet& net) {
  GradBundle g;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.d_weights.emplace_back(net.weights[l].size(), 0.0);
    g.d_biases.emplace_back(net.biases[l].size(), 0.0);
  }
  g.d_input.assign(net.input_dim(), 0.0);
  return g;
}

void GradBundle::scale(double s) {
  for (auto& w : d_weights)
    for (auto& x : w) x *= s;
  for (auto& b : d_biases)
    for (auto& x : b) x *= s;
  for (auto& x : d_input) x *= s;
}

bool GradBundle::all_finite() const {
  for (const auto& w : d_weights)
    if (!finite_vec(w)) return false;
  for (const auto& b : d_biases)
    if (!finite_vec(b)) return false;
  return finite_vec(d_input);
}

void backward_accumulate(const MlpNet& net, const ForwardTrace& trace,
                         std::span<const double> upstream, GradBundle& into) {
  const std::size_t layers = net.layer_count();
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw DimMismatch("backward: upstream size != net output dim");

  std::vector<double> delta(upstream.begin(), upstream.end());
  if (net.head == OutputHead::TanhScaled) {
    const double s = 0.5 * (net.head_hi - net.head_lo);
    const auto& pre = trace.pre[layers - 1];
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double th = std::tanh(pre[i]);
      delta[i] *= s * (1.0 - th * th);
    }
  }

  std::vector<double> d_act;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t rows = net.dims[l + 1], cols = net.dims[l];
    const auto& a = trace.act[l];
    // dW[r,c] += delta[r] * a[c]; db[r] += delta[r]
    for (std::size_t r = 0; r < rows; ++r) {
      kernels::axpy(delta[r], a.data(), into.d_weights[l].data() + r * cols, cols);
      into.d_biases[l][r] += delta[r];
    }
    d_act.resize(cols);
    kernels::matvec_t(net.weights[l].data(), delta.data(), d_act.data(), rows, cols);
    if (l > 0) {
      delta.resize(cols);
      kernels::relu_grad(trace.pre[l - 1].data(), d_act.data(), delta.data(), cols);
    } else {
      for (std::size_t c = 0; c < cols; ++c) into.d_input[c] += d_act[c];
    }
  }
}

GradBundle backward(const MlpNet& net, std::span<const double> x,
                    std::span<const double> upstream) {
  ForwardTrace trace;
  forward(net, x, trace);
  GradBundle g = GradBundle::zeros_like(net);
  backward_accumulate(net, trace, upstream, g);
  return g;
}

void adam_update(MlpNet& net, const GradBundle& grads, double lr, AdamState& state) {
  if (!grads.all_finite()) throw NonFiniteGradient("adam_update: non-finite gradient");
  if (state.t == 0) {
    state.m_w.clear();
    state.v_w.clear();
    state.m_b.clear();
    state.v_b.clear();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      state.m_w.emplace_back(net.weights[l].size(), 0.0);
      state.v_w.emplace_back(net.weights[l].size(), 0.0);
      state.m_b.emplace_back(net.biases[l].size(), 0.0);
      state.v_b.emplace_back(net.biases[l].size(), 0.0);
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weights[l], grads.d_weights[l], state.m_w[l], state.v_w[l]);
    update(net.biases[l], grads.d_biases[l], state.m_b[l], state.v_b[l]);
  }
  if (!net.all_finite()) throw DivergedTraining("adam_update produced non-finite parameters");
}

std::string net_to_json(const MlpNet& net) {
  nlohmann::json j;
  j["format"] = "smoothrl-net";
  j["version"] = 1;
  j["dims"] = net.dims;
  j["head"] = net.head == OutputHead::Linear ? "linear" : "tanh_scaled";
  j["head_lo"] = net.head_lo;
  j["head_hi"] = net.head_hi;
  j["weights"] = net.weights;
  j["biases"] = net.biases;
  return j.dump();
}

MlpNet net_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "smoothrl-net" || j.value("version", 0) != 1)
    throw BadConfig("unrecognized net checkpoint format");
  MlpNet net;
  net.dims = j.at("dims").get<std::vector<int>>();
  check_dims(net.dims);
  net.head = j.at("head").get<std::string>() == "tanh_scaled" ? OutputHead::TanhScaled
                                                              : OutputHead::Linear;
  net.head_lo = j.at("head_lo").get<double>();
  net.head_hi = j.at("head_hi").get<double>();
  net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  if (net.weights.size() + 1 != net.dims.size() || net.biases.size() != net.weights.size())
    throw BadConfig("checkpoint layer count does not match dims");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (net.weights[l].size() !=
            static_cast<std::size_t>(net.dims[l + 1]) * static_cast<std::size_t>(net.dims[l]) ||
        net.biases[l].size() != static_cast<std::size_t>(net.dims[l + 1]))
      throw BadConfig("checkpoint parameter shapes do not match dims");
  }
  return net;
}

void save_net(const MlpNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << net_to_json(net) << '\n';
}

MlpNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingCheckpoint("cannot open checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return net_from_json(text);
}

}  // namespace smoothrl
