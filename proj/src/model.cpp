#include "lira/model.hpp"

#include <stdexcept>

#include "lira/ilvc.hpp"
#include "lira/pixel_decoder.hpp"

namespace lira {

LiraModel LiraModel::create(ModelConfig cfg, Vocab vocab, std::uint64_t seed) {
  cfg.vocab_size = vocab.size();
  cfg.validate();
  std::mt19937_64 rng(seed);
  nn::ParamStore store;
  sefe::init_params(store, cfg, rng);
  lm::init_params(store, cfg, rng);
  decoder::init_params(store, cfg, rng);
  return LiraModel(cfg, std::move(vocab), std::move(store));
}

LiraModel LiraModel::load(ModelConfig cfg, Vocab vocab, const std::filesystem::path& checkpoint) {
  LiraModel m = create(cfg, std::move(vocab), 0);
  nn::ParamStore loaded = nn::ParamStore::load(checkpoint);
  const auto expected = m.params_.names();
  if (loaded.names() != expected)
    throw std::runtime_error(checkpoint.string() +
                             ": parameter names do not match the configured model");
  for (const auto& name : expected)
    if (loaded.get(name).shape() != m.params_.get(name).shape())
      throw std::runtime_error(checkpoint.string() + ": shape mismatch for " + name + " (" +
                               nn::shape_str(loaded.get(name).shape()) + " vs " +
                               nn::shape_str(m.params_.get(name).shape()) + ")");
  loaded.set_trainable(std::set<std::string>(expected.begin(), expected.end()));
  m.params_ = std::move(loaded);
  return m;
}

std::set<std::string> stage_trainable(int stage, const nn::ParamStore& store) {
  if (stage != 1 && stage != 2)
    throw std::invalid_argument("unknown training stage " + std::to_string(stage));
  std::vector<std::string> prefixes = {sefe::kMlpPixel, decoder::kPixelDecoder};
  if (stage == 2) {
    prefixes.push_back(sefe::kMhca);
    prefixes.push_back(lm::kLanguageModel);
    prefixes.push_back(sefe::kMlpSemantic);
  }
  std::set<std::string> out;
  for (const auto& prefix : prefixes) {
    const auto names = store.names_with_prefix(prefix);
    if (names.empty()) throw std::invalid_argument("parameter group " + prefix + " is missing");
    out.insert(names.begin(), names.end());
  }
  return out;
}

void configure_trainable(int stage, nn::ParamStore& store) {
  store.set_trainable(stage_trainable(stage, store));
}

RawFeatures encode_raw(const data::Sample& s, const nn::ParamStore& params,
                       const ModelConfig& cfg) {
  nn::ParamBinding p(params, false);
  RawFeatures raw;
  raw.semantic = sefe::encode_semantic(*s.image, p, cfg);
  raw.pixel = sefe::encode_pixel(*s.image, p, cfg);
  if (s.ilvc)
    for (const auto& r : s.regions)
      raw.local.push_back(
          sefe::encode_semantic(ilvc::crop_region(*s.image, r.mask, cfg.local_res).region, p, cfg));
  return raw;
}

TokenSeq instruction_tokens(const data::Sample& s, const Vocab& vocab) {
  return vocab.encode(s.instruction);
}

InterleavedSequence sample_sequence(const data::Sample& s, const RawFeatures* raw,
                                    nn::ParamBinding& p, const ModelConfig& cfg,
                                    const Vocab& vocab, sefe::SefeOutput* sefe_out) {
  sefe::SefeOutput out = raw ? sefe::sefe_compose(raw->semantic, raw->pixel, p, cfg)
                             : sefe::sefe_forward(*s.image, p, cfg);
  const auto regions = data::annotations(s, vocab);
  ilvc::LocalEncoder encode = [&](std::size_t index, const ImageBuffer& crop) {
    if (raw && index - 1 < raw->local.size())
      return sefe::project(raw->local[index - 1], sefe::Branch::Semantic, p, cfg);
    return sefe::encode_local(crop, p, cfg);
  };
  InterleavedSequence seq =
      ilvc::build_training_sequence(out.global, instruction_tokens(s, vocab), regions, *s.image,
                                    encode, cfg, vocab.specials(), s.ilvc);
  if (sefe_out) *sefe_out = std::move(out);
  return seq;
}

SampleLoss sample_loss(const data::Sample& s, const RawFeatures* raw, nn::ParamBinding& p,
                       const ModelConfig& cfg, const Vocab& vocab,
                       const losses::LossConfig& loss_cfg) {
  sefe::SefeOutput feats;
  const InterleavedSequence seq = sample_sequence(s, raw, p, cfg, vocab, &feats);
  const lm::ForwardResult fwd = lm::forward(seq, p, cfg, vocab.specials());
  const NextTokenTargets t = next_token_targets(seq, vocab.specials());
  const nn::Var text = lm::next_token_loss(fwd.logits, t.targets, t.mask);

  std::vector<losses::MaskPair> masks;
  for (std::size_t i = 0; i < fwd.seg_states.size(); ++i) {
    const auto& gt = s.regions.at(i).mask;
    masks.push_back({decoder::decode_probabilities(fwd.seg_states[i].hidden, feats.pixel_raw,
                                                   gt.height, gt.width, p, cfg),
                     &gt});
  }
  return SampleLoss{losses::combined_loss(text, masks, loss_cfg), seq.length()};
}

InterleavedSequence LiraBackend::begin(const ImageBuffer& img, const TokenSeq& instruction) {
  sefe::SefeOutput out = sefe::sefe_forward(img, binding_, cfg_);
  pixel_raw_ = out.pixel_raw;
  img_h_ = img.height;
  img_w_ = img.width;
  last_.reset();
  last_len_ = 0;
  return ilvc::build_inference_prefix(out.global, instruction);
}

const lm::ForwardResult& LiraBackend::forward(const InterleavedSequence& seq) {
  if (!last_ || last_len_ != seq.length()) {
    last_ = lm::forward(seq, binding_, cfg_, vocab_.specials());
    last_len_ = seq.length();
  }
  return *last_;
}

std::vector<double> LiraBackend::next_logits(const InterleavedSequence& seq) {
  const auto& logits = forward(seq).logits.value();
  const std::size_t v = logits.dim(1), last = logits.dim(0) - 1;
  const auto row = logits.data().subspan(last * v, v);
  return {row.begin(), row.end()};
}

MaskMap LiraBackend::decode_last_seg(const InterleavedSequence& seq) {
  const auto& fwd = forward(seq);
  if (fwd.seg_states.empty() || fwd.seg_states.back().position != seq.length() - 1)
    throw std::logic_error("decode_last_seg: the sequence does not end in a seg slot");
  return decoder::decode_mask(fwd.seg_states.back(), pixel_raw_, {img_h_, img_w_}, binding_, cfg_);
}

FeatureGrid LiraBackend::encode_region(const ImageBuffer& crop) {
  return sefe::encode_local(crop, binding_, cfg_);
}

}  // namespace lira
