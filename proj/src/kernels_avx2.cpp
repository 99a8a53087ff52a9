#include "navfield/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace navfield::kernels {
namespace {

// Elementwise kernels: lane operations are independent, so vector lanes are
// bitwise identical to the scalar loop.

void add_v(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_v(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_v(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void div_v(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] / b[i];
}
void scale_v(const double* a, double s, double* out, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), sv));
  for (; i < n; ++i) out[i] = a[i] * s;
}
void axpy_v(double s, const double* x, double* y, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  // mul then add, not fma: must match the scalar kernel bit-for-bit
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(_mm256_loadu_pd(y + i),
                             _mm256_mul_pd(sv, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += s * x[i];
}
void relu_v(const double* a, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(a + i), zero));
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

// Broadcast-A row update over contiguous B rows. The k-loop order per output
// element matches the scalar kernel; only independent j's are batched.
void gemm_v(std::size_t m, std::size_t k, std::size_t n, const double* a,
            const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      std::size_t j = 0;
      const __m256d zero = _mm256_setzero_pd();
      for (; j + 4 <= n; j += 4) _mm256_storeu_pd(crow + j, zero);
      for (; j < n; ++j) crow[j] = 0.0;
    }
    const double* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const __m256d av = _mm256_set1_pd(arow[kk]);
      const double* brow = b + kk * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(
            crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j),
                                    _mm256_mul_pd(av, _mm256_loadu_pd(brow + j))));
      for (; j < n; ++j) crow[j] += arow[kk] * brow[j];
    }
  }
}

void transpose_v(std::size_t rows, std::size_t cols, const double* src,
                 double* dst) {
  // pure data movement; scalar loop is already memory bound
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

}  // namespace

const KernelTable* avx2_table() {
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  static const KernelTable t = {"avx2",   add_v,  sub_v,  mul_v,      div_v,
                                scale_v,  axpy_v, relu_v, gemm_v, transpose_v};
  return &t;
}

}  // namespace navfield::kernels

#else

namespace navfield::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace navfield::kernels

#endif
