#include "smoothrl/kernels.hpp"

#include <atomic>
#include <cmath>

namespace smoothrl::kernels {

namespace {

// Scalar reference kernels. The lane-structured accumulation mirrors the
// AVX2 reduction exactly; do not "simplify" to a single running sum.

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = std::fma(x[i + 0], y[i + 0], s0);
    s1 = std::fma(x[i + 1], y[i + 1], s1);
    s2 = std::fma(x[i + 2], y[i + 2], s2);
    s3 = std::fma(x[i + 3], y[i + 3], s3);
  }
  double r = (s0 + s2) + (s1 + s3);
  for (; i < n; ++i) r = std::fma(x[i], y[i], r);
  return r;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void matvec_scalar(const double* w, const double* x, const double* b, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double v = dot_scalar(w + r * cols, x, cols);
    y[r] = b ? v + b[r] : v;
  }
}

void matvec_t_scalar(const double* w, const double* v, double* out,
                     std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(v[r], w + r * cols, out, cols);
}

void relu_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_scalar(const double* pre, const double* g, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

const KernelTable kScalarTable{dot_scalar, axpy_scalar, matvec_scalar,
                               matvec_t_scalar, relu_scalar, relu_grad_scalar};

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

void ensure_init() {
  if (g_active.load(std::memory_order_acquire)) return;
  const KernelTable* t = avx2_table();
  if (t && cpu_has_avx2_fma()) {
    g_backend.store(Backend::Avx2, std::memory_order_relaxed);
    g_active.store(t, std::memory_order_release);
  } else {
    g_backend.store(Backend::Scalar, std::memory_order_relaxed);
    g_active.store(&kScalarTable, std::memory_order_release);
  }
}

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

Backend active_backend() {
  ensure_init();
  return g_backend.load(std::memory_order_relaxed);
}

bool set_backend(Backend b) {
  if (b == Backend::Scalar) {
    g_backend.store(Backend::Scalar, std::memory_order_relaxed);
    g_active.store(&kScalarTable, std::memory_order_release);
    return true;
  }
  const KernelTable* t = avx2_table();
  if (!t || !cpu_has_avx2_fma()) return false;
  g_backend.store(Backend::Avx2, std::memory_order_relaxed);
  g_active.store(t, std::memory_order_release);
  return true;
}

std::string_view backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable& active() {
  ensure_init();
  return *g_active.load(std::memory_order_acquire);
}

}  // namespace smoothrl::kernels
