#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lira/grad_check.hpp"
#include "lira/layers.hpp"
#include "lira/ops.hpp"
#include "lira/sefe.hpp"
#include "test_util.hpp"

namespace {

using namespace lira;
using testutil::random_image;
using testutil::random_tensor;

struct Fixture {
  ModelConfig cfg = testutil::tiny_config();
  nn::ParamStore store;
  explicit Fixture(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    sefe::init_params(store, cfg, rng);
  }
};

FeatureGrid grid(nn::Tensor t) { return FeatureGrid{nn::Var::constant(std::move(t))}; }

TEST(Sefe, EncoderTokenCountsAndWidths) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(2);
  const ImageBuffer img = random_image(32, 32, rng);
  const FeatureGrid s = sefe::encode_semantic(img, p, f.cfg);
  const FeatureGrid px = sefe::encode_pixel(img, p, f.cfg);
  EXPECT_EQ(s.tokens(), 16u);
  EXPECT_EQ(s.dim(), f.cfg.enc_dim);
  EXPECT_EQ(px.tokens(), 16u);
  const auto out = sefe::sefe_forward(img, p, f.cfg);
  EXPECT_EQ(out.global.tokens(), 32u);
  EXPECT_EQ(out.global.dim(), f.cfg.d_model);
  EXPECT_EQ(out.pixel_raw.values.value(), px.values.value());
}

TEST(Sefe, EncoderRejectsIndivisibleImages) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(3);
  EXPECT_THROW(sefe::encode_semantic(random_image(30, 32, rng), p, f.cfg), nn::ShapeError);
}

TEST(Sefe, EncodersAreDeterministicAndSeeOnePatchChanges) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(4);
  ImageBuffer img = random_image(32, 32, rng);
  const auto a = sefe::encode_semantic(img, p, f.cfg).values.value();
  EXPECT_EQ(sefe::encode_semantic(img, p, f.cfg).values.value(), a);
  img.at(9, 9, 1) += 0.3;  // inside patch (1, 1)
  EXPECT_NE(sefe::encode_semantic(img, p, f.cfg).values.value(), a);
  const auto b = sefe::encode_pixel(img, p, f.cfg).values.value();
  img.at(30, 2, 0) -= 0.3;
  EXPECT_NE(sefe::encode_pixel(img, p, f.cfg).values.value(), b);
}

TEST(Sefe, ProjectMatchesHandMlp) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(5);
  const nn::Tensor x = random_tensor({3, f.cfg.enc_dim}, rng);
  const auto got = sefe::project(grid(x), sefe::Branch::Pixel, p, f.cfg).values.value();
  const auto& w1 = f.store.get("mlp_p.net.fc1.w");
  const auto& b1 = f.store.get("mlp_p.net.fc1.b");
  const auto& w2 = f.store.get("mlp_p.net.fc2.w");
  const auto& b2 = f.store.get("mlp_p.net.fc2.b");
  const std::size_t hid = w1.dim(1), out = w2.dim(1);
  ASSERT_EQ(got.shape(), (nn::Shape{3, f.cfg.d_model}));
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> h(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      double z = b1[j];
      for (std::size_t i = 0; i < f.cfg.enc_dim; ++i) z += x.at(r, i) * w1.at(i, j);
      h[j] = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
    }
    for (std::size_t j = 0; j < out; ++j) {
      double z = b2[j];
      for (std::size_t i = 0; i < hid; ++i) z += h[i] * w2.at(i, j);
      EXPECT_NEAR(got.at(r, j), z, 1e-12);
    }
  }
  EXPECT_THROW(sefe::project(grid(random_tensor({3, 5}, rng)), sefe::Branch::Semantic, p, f.cfg),
               nn::ShapeError);
}

TEST(Sefe, ProjectWithZeroWeightsGivesBias) {
  Fixture f;
  for (const auto& n : f.store.names_with_prefix("mlp_s."))
    for (double& v : f.store.get_mut(n).data()) v = 0.0;
  f.store.get_mut("mlp_s.net.fc2.b")[3] = 0.7;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(6);
  const auto y = sefe::project(grid(random_tensor({2, f.cfg.enc_dim}, rng)), sefe::Branch::Semantic,
                               p, f.cfg)
                     .values.value();
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < f.cfg.d_model; ++c) EXPECT_EQ(y.at(r, c), c == 3 ? 0.7 : 0.0);
}

TEST(Sefe, ZeroOutputProjectionMakesFusionTheIdentity) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  for (int s = 0; s < 100; ++s) {
    std::mt19937_64 rng(1000 + s);
    const nn::Tensor fs = random_tensor({16, f.cfg.d_model}, rng, 3.0);
    const nn::Tensor fp = random_tensor({16, f.cfg.d_model}, rng, 3.0);
    EXPECT_EQ(sefe::fuse(grid(fs), grid(fp), p, f.cfg).values.value(), fs);
  }
}

TEST(Sefe, FusionMatchesScalarAttentionOracle) {
  ModelConfig cfg = testutil::tiny_config();
  cfg.d_model = 2;
  cfg.heads = 1;
  nn::ParamStore store;
  std::mt19937_64 rng(7);
  sefe::init_params(store, cfg, rng);
  for (const char* n : {"mhca.q.w", "mhca.k.w", "mhca.v.w", "mhca.o.w"})
    store.get_mut(n) = random_tensor({2, 2}, rng);
  for (const char* n : {"mhca.q.b", "mhca.k.b", "mhca.v.b", "mhca.o.b"})
    store.get_mut(n) = random_tensor({2}, rng);
  const nn::Tensor fs = random_tensor({2, 2}, rng), fp = random_tensor({2, 2}, rng);

  auto lin = [&](const nn::Tensor& x, const std::string& name, std::size_t r, std::size_t c) {
    const auto& w = store.get(name + ".w");
    return x.at(r, 0) * w.at(0, c) + x.at(r, 1) * w.at(1, c) + store.get(name + ".b")[c];
  };
  double q[2][2], k[2][2], v[2][2], att[2][2];
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      q[r][c] = lin(fp, "mhca.q", r, c);
      k[r][c] = lin(fs, "mhca.k", r, c);
      v[r][c] = lin(fs, "mhca.v", r, c);
    }
  for (std::size_t i = 0; i < 2; ++i) {
    double s[2];
    for (std::size_t j = 0; j < 2; ++j) s[j] = (q[i][0] * k[j][0] + q[i][1] * k[j][1]) / std::sqrt(2.0);
    const double m = std::max(s[0], s[1]);
    const double e0 = std::exp(s[0] - m), e1 = std::exp(s[1] - m);
    for (std::size_t c = 0; c < 2; ++c) att[i][c] = (e0 * v[0][c] + e1 * v[1][c]) / (e0 + e1);
  }
  nn::ParamBinding p(store, false);
  const auto got = sefe::fuse(grid(fs), grid(fp), p, cfg).values.value();
  const auto& wo = store.get("mhca.o.w");
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      const double want = fs.at(r, c) + att[r][0] * wo.at(0, c) + att[r][1] * wo.at(1, c) +
                          store.get("mhca.o.b")[c];
      EXPECT_NEAR(got.at(r, c), want, 1e-12);
    }
}

TEST(Sefe, FusionRejectsTokenMismatch) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(8);
  EXPECT_THROW(sefe::fuse(grid(random_tensor({4, 8}, rng)), grid(random_tensor({5, 8}, rng)), p, f.cfg),
               nn::ShapeError);
}

TEST(Sefe, ForwardEqualsComposedSubOps) {
  Fixture f;
  std::mt19937_64 rng(9);
  for (double& v : f.store.get_mut("mhca.o.w").data()) v = 0.2 * std::normal_distribution<>()(rng);
  nn::ParamBinding p(f.store, false);
  const ImageBuffer img = random_image(32, 32, rng);
  const auto out = sefe::sefe_forward(img, p, f.cfg);
  const auto fs = sefe::project(sefe::encode_semantic(img, p, f.cfg), sefe::Branch::Semantic, p, f.cfg);
  const auto fp = sefe::project(sefe::encode_pixel(img, p, f.cfg), sefe::Branch::Pixel, p, f.cfg);
  const auto fused = sefe::fuse(fs, fp, p, f.cfg);
  const auto want = nn::concat({fused.values, fp.values}, 0).value();
  EXPECT_EQ(out.global.values.value(), want);
}

TEST(Sefe, LocalEncodingUsesOnlyTheSemanticBranch) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(10);
  const ImageBuffer region = random_image(16, 16, rng);
  const auto local = sefe::encode_local(region, p, f.cfg);
  EXPECT_EQ(local.tokens(), 4u);
  EXPECT_EQ(local.values.value(),
            sefe::project(sefe::encode_semantic(region, p, f.cfg), sefe::Branch::Semantic, p, f.cfg)
                .values.value());
  const auto full = sefe::sefe_forward(region, p, f.cfg).global;
  EXPECT_NE(full.tokens(), local.tokens());
  EXPECT_THROW(sefe::encode_local(random_image(32, 32, rng), p, f.cfg), nn::ShapeError);
}

TEST(Sefe, FusionGradientsMatchFiniteDifferences) {
  Fixture f;
  std::mt19937_64 rng(11);
  for (double& v : f.store.get_mut("mhca.o.w").data()) v = 0.3 * std::normal_distribution<>()(rng);
  for (const auto& n : f.store.names())
    f.store.set_trainable(n, n.rfind("mhca.", 0) == 0);
  const nn::Tensor fs = random_tensor({5, 8}, rng), fp = random_tensor({5, 8}, rng);
  nn::Objective obj = [&](nn::ParamBinding& p) {
    return testutil::weighted_sum(sefe::fuse(grid(fs), grid(fp), p, f.cfg).values, 3);
  };
  const auto report = nn::grad_check(obj, f.store);
  EXPECT_TRUE(report.passed()) << report.max_rel_error;
  EXPECT_GT(report.checked_scalars, 0u);
}

}  // namespace
