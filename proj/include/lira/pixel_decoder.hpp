#pragma once
// Seg-token mask decoder: project the seg hidden state to the pixel-feature
// width, score each patch by dot product, add a scalar bias, squash with a
// sigmoid and upsample the patch grid to image resolution.

#include <random>
#include <utility>

#include "lira/config.hpp"
#include "lira/feature_grid.hpp"
#include "lira/image.hpp"
#include "lira/language_model.hpp"
#include "lira/param_store.hpp"

namespace lira::decoder {

// Parameter group: pixel_decoder.proj.{w,b} (the seg projector) and
// pixel_decoder.bias.
inline constexpr const char* kPixelDecoder = "pixel_decoder.";

void init_params(nn::ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

// Pre-sigmoid patch logits, [grid_h x grid_w].
nn::Var patch_logits(const nn::Var& seg_hidden, const FeatureGrid& pixel_feats,
                     std::size_t grid_h, std::size_t grid_w, nn::ParamBinding& p);

// Differentiable probability map, [out_h x out_w].
nn::Var decode_probabilities(const nn::Var& seg_hidden, const FeatureGrid& pixel_feats,
                             std::size_t out_h, std::size_t out_w, nn::ParamBinding& p,
                             const ModelConfig& cfg);

MaskMap decode_mask(const lm::SegState& seg, const FeatureGrid& pixel_feats,
                    std::pair<std::size_t, std::size_t> out_dims, nn::ParamBinding& p,
                    const ModelConfig& cfg);

MaskMap to_mask_map(const nn::Var& probabilities);

}  // namespace lira::decoder
