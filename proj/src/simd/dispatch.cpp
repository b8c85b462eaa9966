#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "lira/simd/kernels.hpp"

namespace lira::simd {
namespace {

Isa detect() {
  if (const char* env = std::getenv("LIRA_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(LIRA_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_available(isa))
    throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
  active().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa) {
#if defined(LIRA_HAVE_AVX2)
  if (isa == Isa::Avx2) {
    if (!isa_available(Isa::Avx2)) throw std::runtime_error("avx2 kernels not available");
    return avx2::table();
  }
#endif
  (void)isa;
  return scalar::table();
}

const KernelTable& kernels() { return kernels(active_isa()); }

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  thread_local std::vector<double> at;
  at.resize(m * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) at[i * k + p] = a[p * m + i];
  kernels().gemm_nn(m, n, k, at.data(), b, c);
}

}  // namespace lira::simd
