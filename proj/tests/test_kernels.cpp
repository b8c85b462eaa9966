#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lira/simd/kernels.hpp"

namespace {

using lira::simd::Isa;
using lira::simd::KernelTable;

std::vector<double> randv(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Naive triple loop, independent of both kernel tables.
std::vector<double> gemm_oracle(std::size_t m, std::size_t n, std::size_t k,
                                const std::vector<double>& a, const std::vector<double>& b,
                                bool b_transposed) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < k; ++p)
        s += static_cast<long double>(a[i * k + p]) *
             (b_transposed ? b[j * k + p] : b[p * n + j]);
      c[i * n + j] = static_cast<double>(s);
    }
  return c;
}

void expect_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    ASSERT_NEAR(got[i], want[i], tol * (1.0 + std::abs(want[i]))) << "at " << i;
}

std::vector<Isa> available() {
  std::vector<Isa> out{Isa::Scalar};
  if (lira::simd::isa_available(Isa::Avx2)) out.push_back(Isa::Avx2);
  return out;
}

TEST(Kernels, DotMatchesOracleForAllLengths) {
  std::mt19937_64 rng(1);
  for (Isa isa : available()) {
    const KernelTable& k = lira::simd::kernels(isa);
    for (std::size_t n = 0; n < 70; ++n) {
      auto x = randv(n, rng), y = randv(n, rng);
      long double want = 0;
      for (std::size_t i = 0; i < n; ++i) want += static_cast<long double>(x[i]) * y[i];
      EXPECT_NEAR(k.dot(x.data(), y.data(), n), static_cast<double>(want), 1e-13)
          << lira::simd::isa_name(isa) << " n=" << n;
    }
  }
}

TEST(Kernels, AxpyMatchesOracle) {
  std::mt19937_64 rng(2);
  for (Isa isa : available()) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 33u}) {
      auto x = randv(n, rng), y = randv(n, rng);
      auto want = y;
      for (std::size_t i = 0; i < n; ++i) want[i] += 0.37 * x[i];
      lira::simd::kernels(isa).axpy(0.37, x.data(), y.data(), n);
      expect_close(y, want, 1e-15);
    }
  }
}

TEST(Kernels, GemmVariantsMatchOracleOnOddShapes) {
  std::mt19937_64 rng(3);
  const std::size_t dims[] = {1, 2, 3, 5, 8, 13, 17};
  for (Isa isa : available()) {
    const KernelTable& kt = lira::simd::kernels(isa);
    for (std::size_t m : dims)
      for (std::size_t n : dims)
        for (std::size_t k : dims) {
          auto a = randv(m * k, rng), b = randv(k * n, rng), bt = randv(n * k, rng);
          std::vector<double> c(m * n, 0.0), ct(m * n, 0.0);
          kt.gemm_nn(m, n, k, a.data(), b.data(), c.data());
          kt.gemm_nt(m, n, k, a.data(), bt.data(), ct.data());
          expect_close(c, gemm_oracle(m, n, k, a, b, false), 1e-13);
          expect_close(ct, gemm_oracle(m, n, k, a, bt, true), 1e-13);
        }
  }
}

TEST(Kernels, GemmAccumulatesIntoOutput) {
  std::mt19937_64 rng(4);
  for (Isa isa : available()) {
    auto a = randv(6, rng), b = randv(6, rng);
    std::vector<double> c(4, 1.5);
    lira::simd::kernels(isa).gemm_nn(2, 2, 3, a.data(), b.data(), c.data());
    auto want = gemm_oracle(2, 2, 3, a, b, false);
    for (double& w : want) w += 1.5;
    expect_close(c, want, 1e-14);
  }
}

TEST(Kernels, ScalarAndAvx2AgreeOnLargeProblems) {
  if (!lira::simd::isa_available(Isa::Avx2)) GTEST_SKIP() << "no AVX2 on this host";
  std::mt19937_64 rng(5);
  const std::size_t m = 37, n = 71, k = 129;
  auto a = randv(m * k, rng), b = randv(k * n, rng);
  std::vector<double> cs(m * n, 0.0), cv(m * n, 0.0);
  lira::simd::kernels(Isa::Scalar).gemm_nn(m, n, k, a.data(), b.data(), cs.data());
  lira::simd::kernels(Isa::Avx2).gemm_nn(m, n, k, a.data(), b.data(), cv.data());
  expect_close(cv, cs, 1e-12);
}

TEST(Kernels, GemmTnFollowsOracle) {
  std::mt19937_64 rng(6);
  const std::size_t m = 5, n = 7, k = 9;
  auto a = randv(k * m, rng), b = randv(k * n, rng);
  std::vector<double> at(m * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) at[i * k + p] = a[p * m + i];
  std::vector<double> c(m * n, 0.0);
  lira::simd::gemm_tn(m, n, k, a.data(), b.data(), c.data());
  expect_close(c, gemm_oracle(m, n, k, at, b, false), 1e-13);
}

TEST(Kernels, ForceIsaSwitchesDispatch) {
  const Isa before = lira::simd::active_isa();
  lira::simd::force_isa(Isa::Scalar);
  EXPECT_EQ(lira::simd::active_isa(), Isa::Scalar);
  EXPECT_EQ(&lira::simd::kernels(), &lira::simd::kernels(Isa::Scalar));
  lira::simd::force_isa(before);
}

}  // namespace
