#pragma once
// Vector arithmetic kernels behind the MLP and attack inner loops.
//
// Two implementations of every kernel: a scalar reference and an AVX2+FMA
// variant, selected once at runtime from CPU features. The scalar reference
// accumulates dot products in four independent partial sums and combines
// them as ((s0+s2)+(s1+s3)), i.e. the same operation tree the 4-lane vector
// reduction uses, so both backends produce bit-identical results. Tests
// assert exact equality, not closeness.

#include <cstddef>
#include <string_view>

namespace smoothrl::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  // r = sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[r] = dot(W[r,:], x) + (b ? b[r] : 0), W row-major rows x cols
  void (*matvec)(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols);
  // out[c] = sum_r v[r]*W[r,c]  (out must be zeroed by the kernel)
  void (*matvec_t)(const double* w, const double* v, double* out,
                   std::size_t rows, std::size_t cols);
  // out[i] = max(x[i], 0)
  void (*relu)(const double* x, double* out, std::size_t n);
  // out[i] = pre[i] > 0 ? g[i] : 0
  void (*relu_grad)(const double* pre, const double* g, double* out, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when unsupported by CPU or build

Backend active_backend();
bool set_backend(Backend b);  // false if unavailable; used by tests and --no-simd
std::string_view backend_name(Backend b);

const KernelTable& active();

inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}
inline void matvec(const double* w, const double* x, const double* b, double* y,
                   std::size_t rows, std::size_t cols) {
  active().matvec(w, x, b, y, rows, cols);
}
inline void matvec_t(const double* w, const double* v, double* out,
                     std::size_t rows, std::size_t cols) {
  active().matvec_t(w, v, out, rows, cols);
}
inline void relu(const double* x, double* out, std::size_t n) {
  active().relu(x, out, n);
}
inline void relu_grad(const double* pre, const double* g, double* out, std::size_t n) {
  active().relu_grad(pre, g, out, n);
}

inline double sq_norm(const double* x, std::size_t n) { return dot(x, x, n); }

}  // namespace smoothrl::kernels
