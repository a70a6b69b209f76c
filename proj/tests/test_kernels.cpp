#include <doctest.h>

#include <cmath>
#include <vector>

#include "smoothrl/kernels.hpp"
#include "smoothrl/rng.hpp"

using namespace smoothrl;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

// Naive long-double reference, independent of the kernel accumulation order.
long double dot_ld(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
  return s;
}

const std::vector<std::size_t> kSizes{0, 1, 2, 3, 4, 5, 7, 8, 13, 16, 17, 64, 100, 255, 1000};

}  // namespace

TEST_CASE("scalar and avx2 kernels are bit-identical") {
  const kernels::KernelTable& s = kernels::scalar_table();
  const kernels::KernelTable* v = kernels::avx2_table();
  if (!v) return;  // baseline-only build or CPU

  Rng rng(12345);
  for (std::size_t n : kSizes) {
    const auto x = random_vec(rng, n, 3.0);
    const auto y = random_vec(rng, n, 2.0);

    CHECK(s.dot(x.data(), y.data(), n) == v->dot(x.data(), y.data(), n));

    auto ys = y, yv = y;
    s.axpy(1.7, x.data(), ys.data(), n);
    v->axpy(1.7, x.data(), yv.data(), n);
    CHECK(ys == yv);

    std::vector<double> rs(n), rv(n);
    s.relu(x.data(), rs.data(), n);
    v->relu(x.data(), rv.data(), n);
    CHECK(rs == rv);

    s.relu_grad(x.data(), y.data(), rs.data(), n);
    v->relu_grad(x.data(), y.data(), rv.data(), n);
    CHECK(rs == rv);
  }

  for (std::size_t rows : {1u, 3u, 17u, 64u}) {
    for (std::size_t cols : {1u, 5u, 20u, 63u}) {
      const auto w = random_vec(rng, rows * cols);
      const auto x = random_vec(rng, cols);
      const auto b = random_vec(rng, rows);
      const auto u = random_vec(rng, rows);
      std::vector<double> os(rows), ov(rows);
      s.matvec(w.data(), x.data(), b.data(), os.data(), rows, cols);
      v->matvec(w.data(), x.data(), b.data(), ov.data(), rows, cols);
      CHECK(os == ov);

      std::vector<double> ts(cols, -1.0), tv(cols, 7.0);  // kernel must zero these
      s.matvec_t(w.data(), u.data(), ts.data(), rows, cols);
      v->matvec_t(w.data(), u.data(), tv.data(), rows, cols);
      CHECK(ts == tv);
    }
  }
}

TEST_CASE("dot matches a long-double reference") {
  Rng rng(99);
  for (std::size_t n : kSizes) {
    const auto x = random_vec(rng, n, 5.0);
    const auto y = random_vec(rng, n, 5.0);
    const double got = kernels::dot(x.data(), y.data(), n);
    const long double want = dot_ld(x, y);
    CHECK(std::fabs(got - static_cast<double>(want)) <=
          1e-13 * (1.0 + std::fabs(static_cast<double>(want))));
  }
}

TEST_CASE("matvec computes Wx + b") {
  Rng rng(7);
  const std::size_t rows = 9, cols = 14;
  const auto w = random_vec(rng, rows * cols);
  const auto x = random_vec(rng, cols);
  const auto b = random_vec(rng, rows);
  std::vector<double> y(rows);
  kernels::matvec(w.data(), x.data(), b.data(), y.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    long double want = b[r];
    for (std::size_t c = 0; c < cols; ++c)
      want += static_cast<long double>(w[r * cols + c]) * x[c];
    CHECK(std::fabs(y[r] - static_cast<double>(want)) <= 1e-12);
  }

  std::vector<double> y2(rows);
  kernels::matvec(w.data(), x.data(), nullptr, y2.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    CHECK(y2[r] == doctest::Approx(y[r] - b[r]).epsilon(1e-12));
}

TEST_CASE("matvec_t computes W^T v") {
  Rng rng(11);
  const std::size_t rows = 6, cols = 10;
  const auto w = random_vec(rng, rows * cols);
  const auto v = random_vec(rng, rows);
  std::vector<double> out(cols);
  kernels::matvec_t(w.data(), v.data(), out.data(), rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    long double want = 0.0L;
    for (std::size_t r = 0; r < rows; ++r)
      want += static_cast<long double>(w[r * cols + c]) * v[r];
    CHECK(std::fabs(out[c] - static_cast<double>(want)) <= 1e-12);
  }
}

TEST_CASE("relu clamps negatives and zeros") {
  const std::vector<double> x{-1.5, -0.0, 0.0, 2.25, -1e-300};
  std::vector<double> out(x.size());
  kernels::relu(x.data(), out.data(), x.size());
  CHECK(out == std::vector<double>{0.0, 0.0, 0.0, 2.25, 0.0});

  const std::vector<double> g{10, 20, 30, 40, 50};
  kernels::relu_grad(x.data(), g.data(), out.data(), x.size());
  CHECK(out == std::vector<double>{0.0, 0.0, 0.0, 40.0, 0.0});
}

TEST_CASE("backend selection is reported and switchable") {
  const kernels::Backend original = kernels::active_backend();
  CHECK(kernels::set_backend(kernels::Backend::Scalar));
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  CHECK(kernels::backend_name(kernels::Backend::Scalar) == "scalar");
  if (kernels::avx2_table()) {
    CHECK(kernels::set_backend(kernels::Backend::Avx2));
    CHECK(kernels::active_backend() == kernels::Backend::Avx2);
  }
  kernels::set_backend(original);
}
