#pragma once
// Tiny causal decoder over mixed embeddings. Feature blocks are spliced in as
// rows of the input embedding; text and feature positions share one learned
// positional table.

#include <random>
#include <span>
#include <vector>

#include "lira/config.hpp"
#include "lira/param_store.hpp"
#include "lira/sequence.hpp"

namespace lira::lm {

inline constexpr const char* kLanguageModel = "lm.";

void init_params(nn::ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

// Final-layer state at one seg position.
struct SegState {
  std::size_t position = 0;
  nn::Var hidden;  // [1 x d_model]
  nn::Var logits;  // [1 x vocab], the output head applied to hidden
};

struct ForwardResult {
  nn::Var logits;  // [T x vocab]
  nn::Var hidden;  // [T x d_model], after the final layer norm
  std::vector<SegState> seg_states;
};

ForwardResult forward(const InterleavedSequence& seq, nn::ParamBinding& p, const ModelConfig& cfg,
                      const SpecialTokens& sp);

// Mean cross-entropy over positions whose mask bit is set.
nn::Var next_token_loss(const nn::Var& logits, std::span<const TokenId> targets,
                        const std::vector<bool>& supervision_mask);

// Index of the maximum; ties go to the lowest index.
TokenId argmax(std::span<const double> logits);

TokenId sample_greedy(const InterleavedSequence& prefix, nn::ParamBinding& p,
                      const ModelConfig& cfg, const SpecialTokens& sp);

// Lexicon ids ordered by descending logit, ties by ascending id; first k kept.
std::vector<TokenId> top_k_attribute(const SegState& seg, std::span<const TokenId> lexicon,
                                     std::size_t k);
std::vector<TokenId> top_k_attribute(std::span<const double> logits,
                                     std::span<const TokenId> lexicon, std::size_t k);

}  // namespace lira::lm
