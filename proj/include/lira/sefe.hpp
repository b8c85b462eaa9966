#pragma once
// Semantic-enhanced feature extractor: two toy ViT encoders (semantic and
// pixel), per-branch MLP projections to the model width, cross-attention
// fusion with a residual onto the semantic branch, and token-axis
// concatenation into the global feature.

#include <random>

#include "lira/config.hpp"
#include "lira/feature_grid.hpp"
#include "lira/image.hpp"
#include "lira/param_store.hpp"

namespace lira::sefe {

enum class Branch { Semantic, Pixel };

// Parameter groups, by identifier prefix.
inline constexpr const char* kSemanticEncoder = "sem_enc.";
inline constexpr const char* kPixelEncoder = "pix_enc.";
inline constexpr const char* kMlpSemantic = "mlp_s.";
inline constexpr const char* kMlpPixel = "mlp_p.";
inline constexpr const char* kMhca = "mhca.";

// The fusion output projection starts at zero, so an untrained fusion is the
// identity on the semantic branch.
void init_params(nn::ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

// Raw encoder outputs, [(H/patch)*(W/patch) x enc_dim].
FeatureGrid encode_semantic(const ImageBuffer& img, nn::ParamBinding& p, const ModelConfig& cfg);
FeatureGrid encode_pixel(const ImageBuffer& img, nn::ParamBinding& p, const ModelConfig& cfg);

FeatureGrid project(const FeatureGrid& f, Branch which, nn::ParamBinding& p,
                    const ModelConfig& cfg);

// f_s + MHCA(Q = f_p, K = f_s, V = f_s).
FeatureGrid fuse(const FeatureGrid& f_s, const FeatureGrid& f_p, nn::ParamBinding& p,
                 const ModelConfig& cfg);

struct SefeOutput {
  FeatureGrid global;     // [2T x d_model]: fused semantic tokens, then pixel tokens
  FeatureGrid pixel_raw;  // un-projected pixel-encoder features for the mask decoder
};

SefeOutput sefe_forward(const ImageBuffer& img, nn::ParamBinding& p, const ModelConfig& cfg);

// Same as sefe_forward but starting from already computed encoder outputs.
SefeOutput sefe_compose(const FeatureGrid& raw_semantic, const FeatureGrid& raw_pixel,
                        nn::ParamBinding& p, const ModelConfig& cfg);

// Region features: semantic encoder + MLP_s only. The region must already be
// local_res x local_res.
FeatureGrid encode_local(const ImageBuffer& region, nn::ParamBinding& p, const ModelConfig& cfg);

}  // namespace lira::sefe
