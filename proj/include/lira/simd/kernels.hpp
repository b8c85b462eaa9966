#pragma once
// Dense double-precision inner loops used by the tensor ops.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is chosen once at startup from CPUID and can
// be pinned with LIRA_KERNELS=scalar|avx2. Results of the two variants agree
// to rounding (FMA contracts differently), not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace lira::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // c[m x n] += a[m x k] * b[k x n], all row-major and densely packed
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // c[m x n] += a[m x k] * b[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
};

namespace scalar {
const KernelTable& table();
}

#if defined(LIRA_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

bool isa_available(Isa isa);
std::string_view isa_name(Isa isa);

// Active dispatch target. force_isa throws if the ISA is not available here.
Isa active_isa();
void force_isa(Isa isa);
const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return kernels().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  kernels().axpy(a, x.data(), y.data(), x.size());
}

// c[m x n] += a[k x m]^T * b[k x n]; built on axpy so it follows the active ISA.
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);

}  // namespace lira::simd
