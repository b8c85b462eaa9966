#pragma once
// The assembled model: parameter store, configuration and vocabulary, the
// training objective for one sample, and a generation backend.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lira/config.hpp"
#include "lira/dataset.hpp"
#include "lira/generation.hpp"
#include "lira/language_model.hpp"
#include "lira/losses.hpp"
#include "lira/param_store.hpp"
#include "lira/sefe.hpp"
#include "lira/vocab.hpp"

namespace lira {

class LiraModel {
 public:
  // Fresh parameters; every group starts trainable.
  static LiraModel create(ModelConfig cfg, Vocab vocab, std::uint64_t seed);
  // Loads a checkpoint and checks it carries exactly the parameters (names and
  // shapes) that `create` would produce for cfg.
  static LiraModel load(ModelConfig cfg, Vocab vocab, const std::filesystem::path& checkpoint);

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

 private:
  LiraModel(ModelConfig cfg, Vocab vocab, nn::ParamStore params)
      : cfg_(cfg), vocab_(std::move(vocab)), params_(std::move(params)) {}
  ModelConfig cfg_;
  Vocab vocab_;
  nn::ParamStore params_;
};

// Stage 1: MLP_p and the seg projector. Stage 2 adds MHCA, the language model
// and MLP_s. Encoders stay frozen in both.
std::set<std::string> stage_trainable(int stage, const nn::ParamStore& store);
void configure_trainable(int stage, nn::ParamStore& store);

// Encoder outputs for one sample. Valid while the encoders are frozen.
struct RawFeatures {
  FeatureGrid semantic;
  FeatureGrid pixel;
  std::vector<FeatureGrid> local;  // semantic encoder on each GT-mask crop
};

RawFeatures encode_raw(const data::Sample& s, const nn::ParamStore& params,
                       const ModelConfig& cfg);

struct SampleLoss {
  losses::CombinedLoss loss;
  std::size_t seq_length = 0;
};

// Text + mask objective for one sample. `raw` may come from a cache; when
// absent the encoders run inside the binding.
SampleLoss sample_loss(const data::Sample& s, const RawFeatures* raw, nn::ParamBinding& p,
                       const ModelConfig& cfg, const Vocab& vocab,
                       const losses::LossConfig& loss_cfg);

// Teacher-forced training sequence for a sample.
InterleavedSequence sample_sequence(const data::Sample& s, const RawFeatures* raw,
                                    nn::ParamBinding& p, const ModelConfig& cfg,
                                    const Vocab& vocab, sefe::SefeOutput* sefe_out = nullptr);

TokenSeq instruction_tokens(const data::Sample& s, const Vocab& vocab);

class LiraBackend final : public gen::GenerationBackend {
 public:
  LiraBackend(const nn::ParamStore& params, const ModelConfig& cfg, const Vocab& vocab)
      : binding_(params, false), cfg_(cfg), vocab_(vocab) {}

  InterleavedSequence begin(const ImageBuffer& img, const TokenSeq& instruction) override;
  std::vector<double> next_logits(const InterleavedSequence& seq) override;
  MaskMap decode_last_seg(const InterleavedSequence& seq) override;
  FeatureGrid encode_region(const ImageBuffer& crop) override;
  const SpecialTokens& specials() const override { return vocab_.specials(); }
  std::size_t local_res() const override { return cfg_.local_res; }
  std::size_t local_tokens() const override { return cfg_.local_tokens(); }
  std::size_t max_length() const override { return cfg_.max_len; }

  // Forward pass over seq, reusing the previous one when the length matches.
  const lm::ForwardResult& forward(const InterleavedSequence& seq);
  const FeatureGrid& pixel_features() const { return pixel_raw_; }

 private:
  nn::ParamBinding binding_;
  ModelConfig cfg_;
  const Vocab& vocab_;
  std::size_t img_h_ = 0, img_w_ = 0;
  FeatureGrid pixel_raw_;
  std::optional<lm::ForwardResult> last_;
  std::size_t last_len_ = 0;
};

}  // namespace lira
