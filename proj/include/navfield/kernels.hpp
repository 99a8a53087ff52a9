#pragma once

#include <cstddef>

// Arithmetic inner loops used by the tensor layer. Every kernel has a scalar
// reference implementation and (on x86 with AVX2) a vectorized variant that
// performs the same operations in the same order, so both paths are bitwise
// identical. The active table is selected once at startup and can be forced
// via force_backend() or the NAVFIELD_KERNELS env var ("scalar" / "avx2").
namespace navfield::kernels {

struct KernelTable {
  const char* name;
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*div)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(const double* a, double s, double* out, std::size_t n);
  void (*axpy)(double s, const double* x, double* y, std::size_t n);
  void (*relu)(const double* a, double* out, std::size_t n);
  // C (MxN) = A (MxK) * B (KxN), optionally accumulating into C.
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const double* a,
               const double* b, double* c, bool accumulate);
  void (*transpose)(std::size_t rows, std::size_t cols, const double* src,
                    double* dst);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when the CPU lacks AVX2

const KernelTable& active();
void force_backend(const char* name);  // nullptr restores auto-detection

}  // namespace navfield::kernels
