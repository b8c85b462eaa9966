#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lira/language_model.hpp"
#include "lira/ops.hpp"
#include "lira/sequence.hpp"
#include "test_util.hpp"

namespace {

using namespace lira;
using testutil::random_tensor;

struct Fixture {
  Vocab vocab = Vocab::standard();
  ModelConfig cfg = testutil::tiny_config(Vocab::standard().size());
  nn::ParamStore store;
  explicit Fixture(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    lm::init_params(store, cfg, rng);
  }
};

FeatureGrid block(std::size_t tokens, std::size_t dim, std::mt19937_64& rng) {
  return FeatureGrid{nn::Var::constant(random_tensor({tokens, dim}, rng))};
}

InterleavedSequence mixed_sequence(const Fixture& f, std::mt19937_64& rng) {
  InterleavedSequence s;
  s.push_block(block(6, f.cfg.d_model, rng), BlockSource::Global);
  s.push_text(f.vocab.encode("please segment the red square"));
  s.push_seg();
  s.push_text(f.vocab.specials().image_id);
  s.push_block(block(4, f.cfg.d_model, rng), BlockSource::Local, 1);
  s.push_text(f.vocab.encode("<p> red square </p>"));
  s.push_seg();
  s.push_text(f.vocab.specials().eos);
  return s;
}

TEST(Sequence, LengthSupervisionAndPositions) {
  Fixture f;
  std::mt19937_64 rng(1);
  const auto s = mixed_sequence(f, rng);
  EXPECT_EQ(s.length(), 6u + 5 + 1 + 1 + 4 + 4 + 1 + 1);
  EXPECT_EQ(s.seg_count(), 2u);
  const auto sup = s.supervision();
  const auto tok = s.position_tokens(f.vocab.specials());
  ASSERT_EQ(sup.size(), s.length());
  for (std::size_t i = 0; i < 6; ++i) EXPECT_FALSE(sup[i]);
  for (std::size_t i = 13; i < 17; ++i) EXPECT_FALSE(sup[i]) << i;
  EXPECT_TRUE(sup[6]);
  EXPECT_EQ(s.seg_positions(), (std::vector<std::size_t>{11, 21}));
  EXPECT_EQ(tok[11], f.vocab.specials().seg);
  EXPECT_EQ(tok[13], f.vocab.specials().pad);

  const auto t = next_token_targets(s, f.vocab.specials());
  ASSERT_EQ(t.targets.size(), s.length());
  for (std::size_t i = 0; i + 1 < s.length(); ++i) {
    EXPECT_EQ(t.targets[i], tok[i + 1]);
    EXPECT_EQ(t.mask[i], sup[i + 1]);
  }
  EXPECT_FALSE(t.mask.back());
}

TEST(LanguageModel, ShapesAndSegStates) {
  Fixture f;
  std::mt19937_64 rng(2);
  const auto s = mixed_sequence(f, rng);
  nn::ParamBinding p(f.store, false);
  const auto out = lm::forward(s, p, f.cfg, f.vocab.specials());
  EXPECT_EQ(out.logits.shape(), (nn::Shape{s.length(), f.vocab.size()}));
  EXPECT_EQ(out.hidden.shape(), (nn::Shape{s.length(), f.cfg.d_model}));
  ASSERT_EQ(out.seg_states.size(), 2u);
  for (const auto& st : out.seg_states) {
    for (std::size_t c = 0; c < f.vocab.size(); ++c)
      EXPECT_EQ(st.logits.value()[c], out.logits.value().at(st.position, c));
  }
}

TEST(LanguageModel, CausalAtEveryPosition) {
  Fixture f;
  std::mt19937_64 rng(3);
  const auto base = mixed_sequence(f, rng);
  nn::ParamBinding p(f.store, false);
  const auto ref = lm::forward(base, p, f.cfg, f.vocab.specials()).logits.value();
  const std::size_t v = f.vocab.size();
  // Replace the trailing text run with a different one of equal length.
  for (std::size_t cut = 0; cut < 4; ++cut) {
    InterleavedSequence s;
    std::mt19937_64 again(3);
    s.push_block(block(6, f.cfg.d_model, again), BlockSource::Global);
    s.push_text(f.vocab.encode("please segment the red square"));
    s.push_seg();
    s.push_text(f.vocab.specials().image_id);
    s.push_block(block(4, f.cfg.d_model, again), BlockSource::Local, 1);
    const TokenSeq tail = f.vocab.encode("<p> red square </p>");
    for (std::size_t i = 0; i < 4; ++i) s.push_text(i < cut ? tail[i] : f.vocab.id("blue"));
    s.push_seg();
    s.push_text(f.vocab.specials().eos);
    const auto got = lm::forward(s, p, f.cfg, f.vocab.specials()).logits.value();
    const std::size_t unchanged = 17 + cut;  // positions before the first edit
    for (std::size_t t = 0; t < unchanged; ++t)
      for (std::size_t c = 0; c < v; ++c) ASSERT_EQ(got.at(t, c), ref.at(t, c)) << "t=" << t;
  }
}

TEST(LanguageModel, EarlierFeatureBlockChangesLaterLogits) {
  Fixture f;
  std::mt19937_64 rng(4);
  auto s = mixed_sequence(f, rng);
  nn::ParamBinding p(f.store, false);
  const auto ref = lm::forward(s, p, f.cfg, f.vocab.specials()).logits.value();
  std::mt19937_64 rng2(4);
  InterleavedSequence t;
  t.push_block(block(6, f.cfg.d_model, rng2), BlockSource::Global);
  t.push_text(f.vocab.encode("please segment the red square"));
  t.push_seg();
  t.push_text(f.vocab.specials().image_id);
  t.push_block(FeatureGrid{nn::Var::constant(random_tensor({4, f.cfg.d_model}, rng2, 3.0))},
               BlockSource::Local, 1);
  t.push_text(f.vocab.encode("<p> red square </p>"));
  t.push_seg();
  t.push_text(f.vocab.specials().eos);
  const auto got = lm::forward(t, p, f.cfg, f.vocab.specials()).logits.value();
  double diff = 0;
  for (std::size_t c = 0; c < f.vocab.size(); ++c)
    diff = std::max(diff, std::abs(got.at(18, c) - ref.at(18, c)));
  EXPECT_GT(diff, 1e-9);
}

TEST(LanguageModel, ForwardErrors) {
  Fixture f;
  nn::ParamBinding p(f.store, false);
  EXPECT_THROW(lm::forward(InterleavedSequence{}, p, f.cfg, f.vocab.specials()),
               std::invalid_argument);
  std::mt19937_64 rng(5);
  InterleavedSequence wide;
  wide.push_block(block(2, f.cfg.d_model + 1, rng), BlockSource::Global);
  EXPECT_THROW(lm::forward(wide, p, f.cfg, f.vocab.specials()), nn::ShapeError);
  InterleavedSequence longseq;
  longseq.push_text(TokenSeq(f.cfg.max_len + 1, 6));
  EXPECT_THROW(lm::forward(longseq, p, f.cfg, f.vocab.specials()), nn::ShapeError);
}

TEST(LanguageModel, NextTokenLossOracles) {
  const std::size_t v = 9;
  const nn::Var uniform = nn::Var::constant(nn::Tensor({3, v}));
  const std::vector<TokenId> targets = {1, 2, 3};
  EXPECT_NEAR(lm::next_token_loss(uniform, targets, {true, true, true}).value().item(),
              std::log(double(v)), 1e-12);
  nn::Tensor sharp({3, v});
  for (std::size_t r = 0; r < 3; ++r) sharp[r * v + targets[r]] = 60.0;
  EXPECT_LT(lm::next_token_loss(nn::Var::constant(sharp), targets, {true, true, true}).value().item(),
            1e-20);
  std::mt19937_64 rng(6);
  const auto logits = random_tensor({3, v}, rng);
  double want = 0;
  for (std::size_t r : {0u, 2u}) {
    double z = 0;
    for (std::size_t c = 0; c < v; ++c) z += std::exp(logits.at(r, c));
    want += std::log(z) - logits.at(r, targets[r]);
  }
  EXPECT_NEAR(lm::next_token_loss(nn::Var::constant(logits), targets, {true, false, true})
                  .value()
                  .item(),
              want / 2, 1e-12);
}

TEST(LanguageModel, ArgmaxTieRuleAndOracle) {
  std::vector<double> l(12, 0.0);
  l[5] = l[9] = 3.0;
  EXPECT_EQ(lm::argmax(l), 5u);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto t = random_tensor({30}, rng);
    const auto& d = t.storage();
    EXPECT_EQ(lm::argmax(d), static_cast<TokenId>(std::max_element(d.begin(), d.end()) - d.begin()));
  }
  EXPECT_THROW(lm::argmax(std::vector<double>{}), std::invalid_argument);
}

TEST(LanguageModel, GreedyForcedByHeadBias) {
  Fixture f;
  for (double& w : f.store.get_mut("lm.head.w").data()) w = 0.0;
  f.store.get_mut("lm.head.b")[f.vocab.specials().eos] = 5.0;
  nn::ParamBinding p(f.store, false);
  InterleavedSequence s;
  s.push_text(f.vocab.encode("please segment"));
  EXPECT_EQ(lm::sample_greedy(s, p, f.cfg, f.vocab.specials()), f.vocab.specials().eos);
}

TEST(LanguageModel, TopKAttributeOracles) {
  const Vocab vocab = Vocab::standard();
  const auto& loc = vocab.lexicon(AttributeClass::Location);
  std::vector<double> logits(vocab.size(), 0.0);
  logits[vocab.id("left")] = 2.0;
  logits[vocab.id("right")] = 1.0;
  EXPECT_EQ(lm::top_k_attribute(logits, loc, 1), (std::vector<TokenId>{vocab.id("left")}));
  auto all = lm::top_k_attribute(logits, loc, loc.size());
  std::vector<TokenId> sorted_all = all, sorted_lex(loc.begin(), loc.end());
  std::sort(sorted_all.begin(), sorted_all.end());
  std::sort(sorted_lex.begin(), sorted_lex.end());
  EXPECT_EQ(sorted_all, sorted_lex);

  std::mt19937_64 rng(8);
  const auto& col = vocab.lexicon(AttributeClass::Color);
  for (int i = 0; i < 50; ++i) {
    const auto t = random_tensor({vocab.size()}, rng);
    std::vector<TokenId> want(col.begin(), col.end());
    std::stable_sort(want.begin(), want.end(), [&](TokenId a, TokenId b) {
      return t[a] > t[b] || (t[a] == t[b] && a < b);
    });
    want.resize(3);
    EXPECT_EQ(lm::top_k_attribute(t.storage(), col, 3), want);
  }
  EXPECT_THROW(lm::top_k_attribute(logits, std::vector<TokenId>{}, 1), std::invalid_argument);
  EXPECT_THROW(lm::top_k_attribute(logits, loc, loc.size() + 1), std::invalid_argument);
}

}  // namespace
