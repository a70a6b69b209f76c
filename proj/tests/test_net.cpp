#include <doctest.h>

#include <cmath>
#include <vector>

#include "smoothrl/errors.hpp"
#include "smoothrl/net.hpp"
#include "smoothrl/rng.hpp"

using namespace smoothrl;

namespace {

std::vector<double> random_input(Rng& rng, int n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  return x;
}

// Plain-loop evaluation, independent of the kernels module.
std::vector<double> ref_forward(const MlpNet& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const int rows = net.dims[l + 1], cols = net.dims[l];
    std::vector<double> z(rows);
    for (int r = 0; r < rows; ++r) {
      double s = net.biases[l][r];
      for (int c = 0; c < cols; ++c) s += net.weights[l][r * cols + c] * a[c];
      z[r] = s;
    }
    if (l + 1 < net.layer_count()) {
      for (auto& v : z) v = v > 0 ? v : 0.0;
    } else if (net.head == OutputHead::TanhScaled) {
      const double c0 = 0.5 * (net.head_hi + net.head_lo);
      const double s0 = 0.5 * (net.head_hi - net.head_lo);
      for (auto& v : z) v = c0 + s0 * std::tanh(v);
    }
    a = std::move(z);
  }
  return a;
}

double inner(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// Central finite differences of <u, forward(net, x)> with respect to one
// scalar lvalue; invalid when the perturbation flips a hidden ReLU.
struct FdCheck {
  double max_rel_err = 0.0;
  int skipped = 0;
  int total = 0;
};

bool crosses_kink(const MlpNet& net, const std::vector<double>& xa,
                  const std::vector<double>& xb) {
  ForwardTrace ta, tb;
  forward(net, xa, ta);
  forward(net, xb, tb);
  for (std::size_t l = 0; l + 1 < net.layer_count() + 0u; ++l) {
    for (std::size_t i = 0; i < ta.pre[l].size(); ++i) {
      if ((ta.pre[l][i] > 0.0) != (tb.pre[l][i] > 0.0)) return true;
    }
  }
  return false;
}

void fd_one(FdCheck& chk, double analytic, double f_plus, double f_minus, double h,
            bool valid) {
  ++chk.total;
  if (!valid) {
    ++chk.skipped;
    return;
  }
  const double fd = (f_plus - f_minus) / (2.0 * h);
  const double rel = std::fabs(analytic - fd) / std::max({1.0, std::fabs(analytic), std::fabs(fd)});
  chk.max_rel_err = std::max(chk.max_rel_err, rel);
}

FdCheck finite_difference_check(const MlpNet& net, const std::vector<double>& x,
                                const std::vector<double>& u) {
  constexpr double h = 1e-5;
  FdCheck chk;
  const GradBundle g = backward(net, x, u);

  for (int i = 0; i < net.input_dim(); ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd_one(chk, g.d_input[i], inner(u, forward(net, xp)), inner(u, forward(net, xm)), h,
           !crosses_kink(net, xp, xm));
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    MlpNet np = net, nm = net;
    for (std::size_t k = 0; k < net.weights[l].size(); ++k) {
      np.weights[l][k] = net.weights[l][k] + h;
      nm.weights[l][k] = net.weights[l][k] - h;
      ForwardTrace tp, tm;
      const double fp = inner(u, forward(np, x, tp));
      const double fm = inner(u, forward(nm, x, tm));
      bool valid = true;
      for (std::size_t ll = 0; ll + 1 < net.layer_count() && valid; ++ll)
        for (std::size_t ii = 0; ii < tp.pre[ll].size(); ++ii)
          if ((tp.pre[ll][ii] > 0.0) != (tm.pre[ll][ii] > 0.0)) {
            valid = false;
            break;
          }
      fd_one(chk, g.d_weights[l][k], fp, fm, h, valid);
      np.weights[l][k] = net.weights[l][k];
      nm.weights[l][k] = net.weights[l][k];
    }
    for (std::size_t k = 0; k < net.biases[l].size(); ++k) {
      np.biases[l][k] = net.biases[l][k] + h;
      nm.biases[l][k] = net.biases[l][k] - h;
      ForwardTrace tp, tm;
      const double fp = inner(u, forward(np, x, tp));
      const double fm = inner(u, forward(nm, x, tm));
      bool valid = true;
      for (std::size_t ll = 0; ll + 1 < net.layer_count() && valid; ++ll)
        for (std::size_t ii = 0; ii < tp.pre[ll].size(); ++ii)
          if ((tp.pre[ll][ii] > 0.0) != (tm.pre[ll][ii] > 0.0)) {
            valid = false;
            break;
          }
      fd_one(chk, g.d_biases[l][k], fp, fm, h, valid);
      np.biases[l][k] = net.biases[l][k];
      nm.biases[l][k] = net.biases[l][k];
    }
  }
  return chk;
}

}  // namespace

TEST_CASE("zero net maps everything to zero") {
  MlpNet net = MlpNet::zeros({3, 4, 2});
  const auto y = forward(net, std::vector<double>{1.0, -2.0, 0.5});
  CHECK(y == std::vector<double>{0.0, 0.0});
}

TEST_CASE("single linear layer is Wx + b") {
  MlpNet net = MlpNet::zeros({2, 2});
  net.weights[0] = {1.0, 2.0, 3.0, 4.0};  // row-major
  net.biases[0] = {0.5, -0.5};
  const auto y = forward(net, std::vector<double>{1.0, 1.0});
  CHECK(y[0] == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(6.5).epsilon(1e-15));
}

TEST_CASE("forward matches an independent plain-loop oracle") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    MlpNet net = MlpNet::he_uniform({5, 12, 9, 3}, rng);
    const auto x = random_input(rng, 5);
    const auto got = forward(net, x);
    const auto want = ref_forward(net, x);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(std::fabs(got[i] - want[i]) <= 1e-12 * (1.0 + std::fabs(want[i])));
  }
}

TEST_CASE("forward is pure and rejects bad dims") {
  Rng rng(22);
  MlpNet net = MlpNet::he_uniform({4, 8, 2}, rng);
  const auto x = random_input(rng, 4);
  CHECK(forward(net, x) == forward(net, x));
  CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), DimMismatch);
  CHECK_THROWS_AS(backward(net, x, std::vector<double>{1.0}), DimMismatch);
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng(23);
  MlpNet net = MlpNet::he_uniform({3, 6, 2}, rng);
  const auto g = backward(net, random_input(rng, 3), std::vector<double>{0.0, 0.0});
  for (const auto& w : g.d_weights)
    for (double v : w) CHECK(v == 0.0);
  for (double v : g.d_input) CHECK(v == 0.0);
}

TEST_CASE("analytic gradients agree with central finite differences") {
  Rng rng(24);
  for (int rep = 0; rep < 10; ++rep) {
    MlpNet net = MlpNet::he_uniform({4, 10, 8, 3}, rng);
    const auto x = random_input(rng, 4);
    std::vector<double> u(3);
    for (auto& v : u) v = rng.uniform(-1, 1);
    const FdCheck chk = finite_difference_check(net, x, u);
    CHECK(chk.max_rel_err <= 1e-5);
    CHECK(chk.skipped * 100 <= chk.total);  // kink crossings invalidate the oracle, must be rare
  }
}

TEST_CASE("tanh-scaled head gradients agree with finite differences") {
  Rng rng(25);
  for (int rep = 0; rep < 10; ++rep) {
    MlpNet net = MlpNet::he_uniform({3, 8, 1}, rng, OutputHead::TanhScaled, -2.0, 2.0);
    const auto x = random_input(rng, 3);
    const FdCheck chk = finite_difference_check(net, x, {1.0});
    CHECK(chk.max_rel_err <= 1e-5);
  }
}

TEST_CASE("tanh-scaled head stays inside the action box") {
  Rng rng(26);
  MlpNet net = MlpNet::he_uniform({4, 16, 1}, rng, OutputHead::TanhScaled, -1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = forward(net, random_input(rng, 4))[0];
    CHECK(a >= -1.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
  Rng rng(27);
  MlpNet net = MlpNet::he_uniform({2, 4, 1}, rng);
  const MlpNet before = net;
  AdamState state;
  adam_update(net, GradBundle::zeros_like(net), 0.01, state);
  CHECK(net.weights == before.weights);
  CHECK(net.biases == before.biases);
}

TEST_CASE("one adam step matches hand arithmetic") {
  MlpNet net = MlpNet::zeros({1, 1});
  net.weights[0][0] = 2.0;
  GradBundle g = GradBundle::zeros_like(net);
  g.d_weights[0][0] = 0.5;
  AdamState state;
  adam_update(net, g, 0.1, state);
  // m = 0.1*0.5 = 0.05; v = 0.001*0.25 = 0.00025; mhat = 0.5; vhat = 0.25;
  // w = 2 - 0.1 * 0.5 / (0.5 + 1e-8).
  const double want = 2.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(net.weights[0][0] == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("adam drives a quadratic toward zero") {
  MlpNet net = MlpNet::zeros({1, 1});
  net.weights[0][0] = 1.0;
  AdamState state;
  GradBundle g = GradBundle::zeros_like(net);
  double prev = 1.0;
  for (int i = 0; i < 50; ++i) {
    g.d_weights[0][0] = 2.0 * net.weights[0][0];  // d/dw of w^2
    adam_update(net, g, 0.01, state);
    const double w = std::fabs(net.weights[0][0]);
    CHECK(w < prev);
    prev = w;
  }
  CHECK(prev < 0.6);
}

TEST_CASE("adam rejects non-finite gradients") {
  Rng rng(28);
  MlpNet net = MlpNet::he_uniform({2, 2}, rng);
  GradBundle g = GradBundle::zeros_like(net);
  g.d_weights[0][0] = std::numeric_limits<double>::quiet_NaN();
  AdamState state;
  CHECK_THROWS_AS(adam_update(net, g, 0.01, state), NonFiniteGradient);
}

TEST_CASE("json persistence round-trips bit-exactly") {
  Rng rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    MlpNet net = MlpNet::he_uniform({6, 11, 4}, rng,
                                    rep % 2 ? OutputHead::TanhScaled : OutputHead::Linear,
                                    -3.0, 1.5);
    const MlpNet back = net_from_json(net_to_json(net));
    CHECK(back.dims == net.dims);
    CHECK(back.head == net.head);
    CHECK(back.head_lo == net.head_lo);
    CHECK(back.head_hi == net.head_hi);
    CHECK(back.weights == net.weights);  // exact doubles
    CHECK(back.biases == net.biases);
  }
  CHECK_THROWS_AS(net_from_json("{\"format\":\"something-else\"}"), BadConfig);
}
