#include "lira/language_model.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "lira/layers.hpp"
#include "lira/ops.hpp"

namespace lira::lm {

void init_params(nn::ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng) {
  const std::string m = kLanguageModel;
  layers::init_table(store, m + "tok_emb", cfg.vocab_size, cfg.d_model, 1.0, rng);
  layers::init_table(store, m + "pos_emb", cfg.max_len, cfg.d_model, 0.1, rng);
  for (std::size_t l = 0; l < cfg.lm_layers; ++l)
    layers::init_block(store, m + "block" + std::to_string(l), cfg.d_model,
                       cfg.mlp_ratio * cfg.d_model, rng);
  layers::init_layer_norm(store, m + "ln_f", cfg.d_model);
  layers::init_linear(store, m + "head", cfg.d_model, cfg.vocab_size, rng);
}

ForwardResult forward(const InterleavedSequence& seq, nn::ParamBinding& p, const ModelConfig& cfg,
                      const SpecialTokens& sp) {
  if (seq.empty()) throw std::invalid_argument("language model: empty sequence");
  if (seq.length() > cfg.max_len)
    throw nn::ShapeError("language model: sequence length " + std::to_string(seq.length()) +
                         " exceeds max_len " + std::to_string(cfg.max_len));
  const std::string m = kLanguageModel;
  const nn::Var table = p(m + "tok_emb");

  std::vector<nn::Var> pieces;
  TokenSeq run;
  auto flush = [&] {
    if (!run.empty()) pieces.push_back(nn::embedding_lookup(table, run));
    run.clear();
  };
  for (const auto& e : seq.elements()) {
    if (const auto* t = std::get_if<TextElement>(&e)) {
      run.push_back(t->id);
    } else if (std::holds_alternative<SegElement>(e)) {
      run.push_back(sp.seg);
    } else {
      const auto& f = std::get<FeatureElement>(e);
      if (f.grid.dim() != cfg.d_model)
        throw nn::ShapeError("language model: feature block width " +
                             std::to_string(f.grid.dim()) + " != d_model " +
                             std::to_string(cfg.d_model));
      flush();
      pieces.push_back(f.grid.values);
    }
  }
  flush();

  const std::size_t len = seq.length();
  nn::Var x = pieces.size() == 1 ? pieces.front() : nn::concat(pieces, 0);
  x = nn::add(x, nn::slice(p(m + "pos_emb"), 0, 0, len));
  for (std::size_t l = 0; l < cfg.lm_layers; ++l)
    x = layers::block(p, m + "block" + std::to_string(l), x, cfg.heads, true);
  ForwardResult out;
  out.hidden = layers::layer_norm(p, m + "ln_f", x);
  out.logits = layers::linear(p, m + "head", out.hidden);
  for (auto pos : seq.seg_positions()) {
    SegState s;
    s.position = pos;
    s.hidden = nn::slice(out.hidden, 0, pos, pos + 1);
    s.logits = nn::slice(out.logits, 0, pos, pos + 1);
    out.seg_states.push_back(std::move(s));
  }
  return out;
}

nn::Var next_token_loss(const nn::Var& logits, std::span<const TokenId> targets,
                        const std::vector<bool>& supervision_mask) {
  return nn::cross_entropy(logits, targets, supervision_mask);
}

TokenId argmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("argmax of empty logits");
  TokenId best = 0;
  for (TokenId i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

TokenId sample_greedy(const InterleavedSequence& prefix, nn::ParamBinding& p,
                      const ModelConfig& cfg, const SpecialTokens& sp) {
  const ForwardResult r = forward(prefix, p, cfg, sp);
  const auto& lv = r.logits.value();
  const std::size_t v = lv.dim(1);
  return argmax(lv.data().subspan((lv.dim(0) - 1) * v, v));
}

std::vector<TokenId> top_k_attribute(std::span<const double> logits,
                                     std::span<const TokenId> lexicon, std::size_t k) {
  if (lexicon.empty()) throw std::invalid_argument("top_k_attribute: empty lexicon");
  if (k > lexicon.size())
    throw std::invalid_argument("top_k_attribute: k exceeds lexicon size");
  std::vector<TokenId> ids(lexicon.begin(), lexicon.end());
  for (auto id : ids)
    if (id >= logits.size()) throw std::out_of_range("top_k_attribute: id outside logits");
  std::sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return a < b;
  });
  ids.resize(k);
  return ids;
}

std::vector<TokenId> top_k_attribute(const SegState& seg, std::span<const TokenId> lexicon,
                                     std::size_t k) {
  return top_k_attribute(seg.logits.value().data(), lexicon, k);
}

}  // namespace lira::lm
