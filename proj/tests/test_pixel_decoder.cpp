#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lira/grad_check.hpp"
#include "lira/ops.hpp"
#include "lira/pixel_decoder.hpp"
#include "test_util.hpp"

namespace {

using namespace lira;
using testutil::random_tensor;

struct Fixture {
  ModelConfig cfg = testutil::tiny_config();
  nn::ParamStore store;
  explicit Fixture(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    decoder::init_params(store, cfg, rng);
  }
};

lm::SegState seg_state(nn::Tensor hidden) {
  lm::SegState s;
  s.hidden = nn::Var::constant(std::move(hidden));
  return s;
}

FeatureGrid feats(std::size_t tokens, std::size_t dim, std::mt19937_64& rng) {
  return FeatureGrid{nn::Var::constant(random_tensor({tokens, dim}, rng))};
}

TEST(PixelDecoder, ZeroHiddenAndBiasGiveOneHalf) {
  Fixture f;
  for (double& v : f.store.get_mut("pixel_decoder.proj.b").data()) v = 0.0;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(2);
  const MaskMap m = decoder::decode_mask(seg_state(nn::Tensor({1, f.cfg.d_model})),
                                         feats(16, f.cfg.enc_dim, rng), {32, 32}, p, f.cfg);
  EXPECT_EQ(m.height, 32u);
  EXPECT_EQ(m.width, 32u);
  for (double v : m.values) EXPECT_EQ(v, 0.5);
}

TEST(PixelDecoder, PatchGridMatchesDotProductOracle) {
  ModelConfig cfg = testutil::tiny_config();
  cfg.canvas = 16;  // 2x2 patch grid
  cfg.max_len = 40;
  nn::ParamStore store;
  std::mt19937_64 rng(3);
  decoder::init_params(store, cfg, rng);
  store.get_mut("pixel_decoder.bias")[0] = -0.3;
  store.get_mut("pixel_decoder.proj.b") = random_tensor({cfg.enc_dim}, rng);
  nn::ParamBinding p(store, false);
  const nn::Tensor h = random_tensor({1, cfg.d_model}, rng);
  const FeatureGrid F = feats(4, cfg.enc_dim, rng);
  const MaskMap m = decoder::decode_mask(seg_state(h), F, {16, 16}, p, cfg);

  const auto& w = store.get("pixel_decoder.proj.w");
  const auto& b = store.get("pixel_decoder.proj.b");
  std::vector<double> q(cfg.enc_dim);
  for (std::size_t j = 0; j < cfg.enc_dim; ++j) {
    q[j] = b[j];
    for (std::size_t i = 0; i < cfg.d_model; ++i) q[j] += h[i] * w.at(i, j);
  }
  for (std::size_t t = 0; t < 4; ++t) {
    double z = -0.3;
    for (std::size_t j = 0; j < cfg.enc_dim; ++j) z += q[j] * F.values.value().at(t, j);
    const double want = 1.0 / (1.0 + std::exp(-z));
    const std::size_t gy = t / 2, gx = t % 2;
    for (std::size_t y = gy * 8; y < gy * 8 + 8; ++y)
      for (std::size_t x = gx * 8; x < gx * 8 + 8; ++x) EXPECT_NEAR(m.at(y, x), want, 1e-14);
  }
}

TEST(PixelDecoder, RejectsBadDims) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(4);
  const auto s = seg_state(random_tensor({1, f.cfg.d_model}, rng));
  EXPECT_THROW(decoder::decode_mask(s, feats(16, f.cfg.enc_dim, rng), {30, 32}, p, f.cfg),
               nn::ShapeError);
  EXPECT_THROW(decoder::decode_mask(s, feats(9, f.cfg.enc_dim, rng), {32, 32}, p, f.cfg),
               nn::ShapeError);
}

TEST(PixelDecoder, PositiveScalingKeepsPatchRanking) {
  Fixture f;
  for (double& v : f.store.get_mut("pixel_decoder.proj.b").data()) v = 0.0;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(5);
  const FeatureGrid F = feats(16, f.cfg.enc_dim, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const nn::Tensor h = random_tensor({1, f.cfg.d_model}, rng);
    nn::Tensor h2 = h;
    for (double& v : h2.data()) v *= 3.7;
    const auto a = decoder::patch_logits(nn::Var::constant(h), F, 4, 4, p).value();
    const auto b = decoder::patch_logits(nn::Var::constant(h2), F, 4, 4, p).value();
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j)
        if (a[i] > a[j]) EXPECT_GT(b[i], b[j]);
  }
}

TEST(PixelDecoder, GradientsThroughHiddenAndProjector) {
  Fixture f;
  std::mt19937_64 rng(6);
  f.store.add("h", random_tensor({1, f.cfg.d_model}, rng));
  const FeatureGrid F = feats(16, f.cfg.enc_dim, rng);
  nn::Objective obj = [&](nn::ParamBinding& p) {
    return testutil::weighted_sum(decoder::decode_probabilities(p("h"), F, 32, 32, p, f.cfg), 7);
  };
  const auto r = nn::grad_check(obj, f.store);
  EXPECT_TRUE(r.passed()) << r.max_rel_error;
}

TEST(PixelDecoder, ProbabilitiesStayInUnitInterval) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  std::mt19937_64 rng(8);
  const MaskMap m = decoder::decode_mask(seg_state(random_tensor({1, f.cfg.d_model}, rng, 10.0)),
                                         feats(16, f.cfg.enc_dim, rng), {32, 32}, p, f.cfg);
  for (double v : m.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

}  // namespace
