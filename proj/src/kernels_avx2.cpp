#include "smoothrl/kernels.hpp"

// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; callers reach it through the dispatch table after the
// CPU feature check in kernels.cpp.

#if defined(SMOOTHRL_COMPILE_AVX2) && (defined(__x86_64__) || defined(__i386__))

#include <immintrin.h>

#include <cmath>

namespace smoothrl::kernels {

namespace {

inline double reduce4(__m256d acc) {
  // [s0,s1,s2,s3] -> (s0+s2)+(s1+s3), matching the scalar reference.
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  __m128d sum2 = _mm_add_pd(lo, hi);            // [s0+s2, s1+s3]
  __m128d shuf = _mm_unpackhi_pd(sum2, sum2);   // [s1+s3, s1+s3]
  return _mm_cvtsd_f64(_mm_add_sd(sum2, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double r = reduce4(acc);
  for (; i < n; ++i) r = std::fma(x[i], y[i], r);
  return r;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void matvec_avx2(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double v = dot_avx2(w + r * cols, x, cols);
    y[r] = b ? v + b[r] : v;
  }
}

void matvec_t_avx2(const double* w, const double* v, double* out,
                   std::size_t rows, std::size_t cols) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) _mm256_storeu_pd(out + c, _mm256_setzero_pd());
  for (; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(v[r], w + r * cols, out, cols);
}

void relu_avx2(const double* x, double* out, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx2(const double* pre, const double* g, double* out, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
  }
  for (; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

const KernelTable kAvx2Table{dot_avx2, axpy_avx2, matvec_avx2,
                             matvec_t_avx2, relu_avx2, relu_grad_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2Table; }

}  // namespace smoothrl::kernels

#else

namespace smoothrl::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace smoothrl::kernels

#endif
