#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lira/grad_check.hpp"
#include "lira/losses.hpp"
#include "lira/metrics.hpp"
#include "test_util.hpp"

namespace {

using namespace lira;

MaskMap random_map(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MaskMap m{h, w, std::vector<double>(h * w)};
  for (double& v : m.values) v = u(rng);
  return m;
}

nn::Var as_var(const MaskMap& m) {
  return nn::Var::constant(nn::Tensor({m.height, m.width}, m.values));
}

double ce_oracle(const MaskMap& p, const BinaryMask& g, double clamp) {
  double s = 0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double q = std::min(std::max(p.values[i], clamp), 1.0 - clamp);
    s += g.bits[i] ? -std::log(q) : -std::log(1.0 - q);
  }
  return s / static_cast<double>(p.values.size());
}

double dice_oracle(const MaskMap& p, const BinaryMask& g, double eps) {
  double inter = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    inter += p.values[i] * g.bits[i];
    sp += p.values[i];
    sg += g.bits[i];
  }
  return 1.0 - (2 * inter + eps) / (sp + sg + eps);
}

TEST(Losses, MatchPixelOracles) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const MaskMap p = random_map(12, 9, rng);
    const BinaryMask g = testutil::random_mask(12, 9, 0.3, rng);
    EXPECT_NEAR(losses::mask_ce(p, g), ce_oracle(p, g, 1e-7), 1e-10);
    EXPECT_NEAR(losses::dice_loss(p, g), dice_oracle(p, g, 1.0), 1e-10);
    EXPECT_NEAR(losses::mask_ce(as_var(p), g).value().item(), ce_oracle(p, g, 1e-7), 1e-10);
    EXPECT_NEAR(losses::dice_loss(as_var(p), g, 0.5).value().item(), dice_oracle(p, g, 0.5),
                1e-10);
  }
}

TEST(Losses, Boundaries) {
  BinaryMask g = BinaryMask::empty(4, 4);
  for (std::size_t x = 0; x < 4; ++x) g.set(1, x, true);
  MaskMap perfect{4, 4, std::vector<double>(16, 0.0)};
  for (std::size_t x = 0; x < 4; ++x) perfect.values[4 + x] = 1.0;
  EXPECT_NEAR(losses::dice_loss(perfect, g), 0.0, 1e-15);
  EXPECT_LT(losses::mask_ce(perfect, g), 1e-6);
  MaskMap inverted = perfect;
  for (double& v : inverted.values) v = 1.0 - v;
  EXPECT_NEAR(losses::dice_loss(inverted, g), 1.0 - 1.0 / 17.0, 1e-15);
  EXPECT_TRUE(std::isfinite(losses::mask_ce(inverted, g)));
  EXPECT_THROW(losses::dice_loss(MaskMap{3, 4, std::vector<double>(12)}, g), nn::ShapeError);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  nn::ParamStore store;
  nn::Tensor z({6, 5});
  std::normal_distribution<double> nd(0.0, 1.0);
  for (double& v : z.data()) v = nd(rng);
  store.add("z", z);
  const BinaryMask g = testutil::random_mask(6, 5, 0.4, rng);
  nn::Objective obj = [&](nn::ParamBinding& p) {
    const nn::Var pred = nn::sigmoid(p("z"));
    const std::vector<losses::MaskPair> pairs = {{pred, &g}};
    return losses::combined_loss(nn::Var::constant(nn::Tensor::scalar(0.3)), pairs, {}).total;
  };
  const auto r = nn::grad_check(obj, store);
  EXPECT_TRUE(r.passed()) << r.max_rel_error;
}

TEST(Losses, CombinedArithmetic) {
  std::mt19937_64 rng(3);
  const MaskMap a = random_map(4, 4, rng), b = random_map(4, 4, rng);
  const BinaryMask ga = testutil::random_mask(4, 4, 0.5, rng),
                   gb = testutil::random_mask(4, 4, 0.5, rng);
  losses::LossConfig cfg;
  cfg.alpha = 0.7;
  cfg.w_ce = 2.0;
  cfg.w_dice = 0.5;
  const std::vector<losses::MaskPair> pairs = {{as_var(a), &ga}, {as_var(b), &gb}};
  const auto c = losses::combined_loss(nn::Var::constant(nn::Tensor::scalar(1.25)), pairs, cfg);
  const double ce = (ce_oracle(a, ga, 1e-7) + ce_oracle(b, gb, 1e-7)) / 2;
  const double dice = (dice_oracle(a, ga, 1.0) + dice_oracle(b, gb, 1.0)) / 2;
  EXPECT_NEAR(c.report.ce, ce, 1e-12);
  EXPECT_NEAR(c.report.dice, dice, 1e-12);
  EXPECT_NEAR(c.report.total, 1.25 + 0.7 * (2.0 * ce + 0.5 * dice), 1e-12);
  EXPECT_NEAR(c.total.value().item(), c.report.total, 1e-12);
  const auto text_only =
      losses::combined_loss(nn::Var::constant(nn::Tensor::scalar(1.25)), {}, cfg);
  EXPECT_EQ(text_only.report.total, 1.25);
  EXPECT_EQ(text_only.report.mask, 0.0);
  const auto s = losses::combine(1.25, ce, dice, cfg);
  EXPECT_NEAR(s.total, c.report.total, 1e-12);
}

TEST(Metrics, MatchBruteForce) {
  std::mt19937_64 rng(4);
  metrics::MaskPairs pairs;
  std::uint64_t ti = 0, tu = 0;
  double sum = 0;
  for (int i = 0; i < 100; ++i) {
    const BinaryMask p = testutil::random_mask(10, 13, 0.3, rng);
    const BinaryMask g = testutil::random_mask(10, 13, 0.2, rng);
    std::uint64_t in = 0, un = 0;
    for (std::size_t k = 0; k < p.bits.size(); ++k) {
      in += p.bits[k] && g.bits[k];
      un += p.bits[k] || g.bits[k];
    }
    const auto c = metrics::count(p, g);
    EXPECT_EQ(c.intersection, in);
    EXPECT_EQ(c.union_, un);
    const double want = un == 0 ? 1.0 : static_cast<double>(in) / static_cast<double>(un);
    EXPECT_EQ(metrics::iou(p, g), want);
    ti += in;
    tu += un;
    sum += want;
    pairs.emplace_back(p, g);
  }
  const auto r = metrics::aggregate(pairs);
  EXPECT_EQ(r.total_intersection, ti);
  EXPECT_EQ(r.total_union, tu);
  EXPECT_EQ(r.ciou, static_cast<double>(ti) / static_cast<double>(tu));
  EXPECT_NEAR(r.giou, sum / 100, 1e-15);
  EXPECT_EQ(r.miou, r.giou);
  EXPECT_EQ(r.n, 100u);
}

TEST(Metrics, PooledAndMeanDifferOnUnequalUnions) {
  // Sample A: 1 of 1 pixel overlaps (IoU 1). Sample B: nothing of 9 pixels (IoU 0).
  BinaryMask a = BinaryMask::empty(3, 3), b_pred = BinaryMask::empty(3, 3),
             b_gt = BinaryMask::empty(3, 3);
  a.set(0, 0, true);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 3; ++x) ((y * 3 + x) % 2 ? b_pred : b_gt).set(y, x, true);
  const auto r = metrics::aggregate(metrics::MaskPairs{{a, a}, {b_pred, b_gt}});
  EXPECT_EQ(r.giou, 0.5);
  EXPECT_EQ(r.ciou, 0.1);
  EXPECT_NE(r.ciou, r.giou);
}

TEST(Metrics, EdgeCases) {
  const BinaryMask e = BinaryMask::empty(4, 4);
  EXPECT_EQ(metrics::iou(e, e), 1.0);
  EXPECT_THROW(metrics::iou(e, BinaryMask::empty(4, 5)), std::invalid_argument);
  EXPECT_THROW(metrics::aggregate(metrics::MaskPairs{}), std::invalid_argument);
  const auto r = metrics::aggregate(metrics::MaskPairs{{e, e}});
  EXPECT_EQ(metrics::to_csv(r), "index,intersection,union,iou\n0,0,0,1\n");
}

TEST(Metrics, BinarizeIsStrict) {
  MaskMap m{2, 2, {0.5, 0.500001, 0.9, 0.0}};
  const BinaryMask b = binarize(m);
  EXPECT_EQ(b.bits, (std::vector<std::uint8_t>{0, 1, 1, 0}));
  EXPECT_EQ(binarize(m, 0.95).area(), 0u);
}

}  // namespace
