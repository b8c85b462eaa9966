// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.
#include <immintrin.h>

#include <vector>

#include "lira/simd/kernels.hpp"

namespace lira::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

// Register-blocked over 16 output columns: four accumulators stay live across k.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      __m256d c1 = _mm256_loadu_pd(ci + j + 4);
      __m256d c2 = _mm256_loadu_pd(ci + j + 8);
      __m256d c3 = _mm256_loadu_pd(ci + j + 12);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(ai[p]);
        const double* bp = b + p * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      for (std::size_t p = 0; p < k; ++p)
        c0 = _mm256_fmadd_pd(_mm256_set1_pd(ai[p]), _mm256_loadu_pd(b + p * n + j), c0);
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double s = ci[j];
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * b[p * n + j];
      ci[j] = s;
    }
  }
}

// b is n x k; a transposed copy lets the blocked gemm_nn do the work.
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  if (k >= 64) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
    return;
  }
  thread_local std::vector<double> bt;
  bt.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(m, n, k, a, bt.data(), c);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{&dot, &axpy, &gemm_nn, &gemm_nt};
  return t;
}

}  // namespace lira::simd::avx2
