#include "lira/pixel_decoder.hpp"

#include <string>

#include "lira/layers.hpp"
#include "lira/ops.hpp"

namespace lira::decoder {

void init_params(nn::ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng) {
  const std::string m = kPixelDecoder;
  layers::init_linear(store, m + "proj", cfg.d_model, cfg.enc_dim, rng);
  store.add(m + "bias", nn::Tensor({1}));
}

nn::Var patch_logits(const nn::Var& seg_hidden, const FeatureGrid& pixel_feats,
                     std::size_t grid_h, std::size_t grid_w, nn::ParamBinding& p) {
  const std::string m = kPixelDecoder;
  if (pixel_feats.tokens() != grid_h * grid_w)
    throw nn::ShapeError("decode_mask: " + std::to_string(pixel_feats.tokens()) +
                         " pixel tokens for a " + std::to_string(grid_h) + "x" +
                         std::to_string(grid_w) + " grid");
  const nn::Var query = layers::linear(p, m + "proj", seg_hidden);  // [1 x Dp]
  const nn::Var scores = nn::matmul(pixel_feats.values, nn::transpose(query));  // [T x 1]
  return nn::reshape(nn::add_row(scores, p(m + "bias")), {grid_h, grid_w});
}

nn::Var decode_probabilities(const nn::Var& seg_hidden, const FeatureGrid& pixel_feats,
                             std::size_t out_h, std::size_t out_w, nn::ParamBinding& p,
                             const ModelConfig& cfg) {
  const std::size_t g = cfg.grid();
  if (out_h % g != 0 || out_w % g != 0)
    throw nn::ShapeError("decode_mask: output " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + " is not a multiple of the " +
                         std::to_string(g) + "x" + std::to_string(g) + " patch grid");
  return nn::upsample_nearest(nn::sigmoid(patch_logits(seg_hidden, pixel_feats, g, g, p)), out_h,
                              out_w);
}

MaskMap decode_mask(const lm::SegState& seg, const FeatureGrid& pixel_feats,
                    std::pair<std::size_t, std::size_t> out_dims, nn::ParamBinding& p,
                    const ModelConfig& cfg) {
  return to_mask_map(
      decode_probabilities(seg.hidden, pixel_feats, out_dims.first, out_dims.second, p, cfg));
}

MaskMap to_mask_map(const nn::Var& probabilities) {
  const auto& v = probabilities.value();
  return MaskMap{v.dim(0), v.dim(1), v.storage()};
}

}  // namespace lira::decoder
