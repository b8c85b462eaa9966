#include "lira/sefe.hpp"

#include <string>

#include "lira/layers.hpp"
#include "lira/ops.hpp"

namespace lira::sefe {
namespace {

void init_encoder(nn::ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                  std::mt19937_64& rng) {
  const std::size_t patch_dim = 3 * cfg.patch * cfg.patch;
  layers::init_linear(store, prefix + "patch", patch_dim, cfg.enc_dim, rng);
  layers::init_table(store, prefix + "pos", cfg.global_tokens(), cfg.enc_dim, 0.5, rng);
  for (std::size_t l = 0; l < cfg.enc_layers; ++l)
    layers::init_block(store, prefix + "block" + std::to_string(l), cfg.enc_dim,
                       cfg.mlp_ratio * cfg.enc_dim, rng);
  layers::init_layer_norm(store, prefix + "ln_f", cfg.enc_dim);
}

// Position rows for a gh x gw grid. Smaller grids (region crops) are spread
// over the full positional table so a crop covers the same frame extent.
std::vector<std::size_t> position_ids(std::size_t gh, std::size_t gw, const ModelConfig& cfg) {
  const std::size_t g = cfg.grid();
  std::vector<std::size_t> ids;
  ids.reserve(gh * gw);
  for (std::size_t r = 0; r < gh; ++r)
    for (std::size_t c = 0; c < gw; ++c) ids.push_back((r * g / gh) * g + c * g / gw);
  return ids;
}

FeatureGrid run_encoder(const ImageBuffer& img, const std::string& prefix, nn::ParamBinding& p,
                        const ModelConfig& cfg) {
  if (img.height > cfg.canvas || img.width > cfg.canvas)
    throw nn::ShapeError("encoder input " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " exceeds canvas " +
                         std::to_string(cfg.canvas));
  const nn::Var patches = nn::Var::constant(patchify(img, cfg.patch));
  const auto ids = position_ids(img.height / cfg.patch, img.width / cfg.patch, cfg);
  nn::Var x = nn::add(layers::linear(p, prefix + "patch", patches),
                      nn::embedding_lookup(p(prefix + "pos"), ids));
  for (std::size_t l = 0; l < cfg.enc_layers; ++l)
    x = layers::block(p, prefix + "block" + std::to_string(l), x, cfg.enc_heads, false);
  return FeatureGrid{layers::layer_norm(p, prefix + "ln_f", x)};
}

}  // namespace

void init_params(nn::ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng) {
  init_encoder(store, kSemanticEncoder, cfg, rng);
  init_encoder(store, kPixelEncoder, cfg, rng);
  layers::init_mlp(store, std::string(kMlpSemantic) + "net", cfg.enc_dim, cfg.d_model,
                   cfg.d_model, rng);
  layers::init_mlp(store, std::string(kMlpPixel) + "net", cfg.enc_dim, cfg.d_model, cfg.d_model,
                   rng);
  const std::string m = kMhca;
  layers::init_linear(store, m + "q", cfg.d_model, cfg.d_model, rng);
  layers::init_linear(store, m + "k", cfg.d_model, cfg.d_model, rng);
  layers::init_linear(store, m + "v", cfg.d_model, cfg.d_model, rng);
  layers::init_linear(store, m + "o", cfg.d_model, cfg.d_model, rng, /*zero_weight=*/true);
}

FeatureGrid encode_semantic(const ImageBuffer& img, nn::ParamBinding& p, const ModelConfig& cfg) {
  return run_encoder(img, kSemanticEncoder, p, cfg);
}

FeatureGrid encode_pixel(const ImageBuffer& img, nn::ParamBinding& p, const ModelConfig& cfg) {
  return run_encoder(img, kPixelEncoder, p, cfg);
}

FeatureGrid project(const FeatureGrid& f, Branch which, nn::ParamBinding& p,
                    const ModelConfig& cfg) {
  if (f.dim() != cfg.enc_dim)
    throw nn::ShapeError("project: feature width " + std::to_string(f.dim()) +
                         " does not match projection input " + std::to_string(cfg.enc_dim));
  const std::string prefix =
      std::string(which == Branch::Semantic ? kMlpSemantic : kMlpPixel) + "net";
  return FeatureGrid{layers::mlp(p, prefix, f.values)};
}

FeatureGrid fuse(const FeatureGrid& f_s, const FeatureGrid& f_p, nn::ParamBinding& p,
                 const ModelConfig& cfg) {
  if (f_s.tokens() != f_p.tokens())
    throw nn::ShapeError("fuse: semantic tokens " + std::to_string(f_s.tokens()) +
                         " != pixel tokens " + std::to_string(f_p.tokens()));
  if (f_s.dim() != cfg.d_model || f_p.dim() != cfg.d_model)
    throw nn::ShapeError("fuse: both branches must have width " + std::to_string(cfg.d_model));
  const std::string m = kMhca;
  const nn::Var q = layers::linear(p, m + "q", f_p.values);
  const nn::Var k = layers::linear(p, m + "k", f_s.values);
  const nn::Var v = layers::linear(p, m + "v", f_s.values);
  const nn::Var att = nn::attention(q, k, v, cfg.heads, false);
  return FeatureGrid{nn::add(f_s.values, layers::linear(p, m + "o", att))};
}

SefeOutput sefe_compose(const FeatureGrid& raw_semantic, const FeatureGrid& raw_pixel,
                        nn::ParamBinding& p, const ModelConfig& cfg) {
  const FeatureGrid f_s = project(raw_semantic, Branch::Semantic, p, cfg);
  const FeatureGrid f_p = project(raw_pixel, Branch::Pixel, p, cfg);
  const FeatureGrid fused = fuse(f_s, f_p, p, cfg);
  return SefeOutput{FeatureGrid{nn::concat({fused.values, f_p.values}, 0)}, raw_pixel};
}

SefeOutput sefe_forward(const ImageBuffer& img, nn::ParamBinding& p, const ModelConfig& cfg) {
  return sefe_compose(encode_semantic(img, p, cfg), encode_pixel(img, p, cfg), p, cfg);
}

FeatureGrid encode_local(const ImageBuffer& region, nn::ParamBinding& p, const ModelConfig& cfg) {
  if (region.height != cfg.local_res || region.width != cfg.local_res)
    throw nn::ShapeError("encode_local: region " + std::to_string(region.height) + "x" +
                         std::to_string(region.width) + " must be " +
                         std::to_string(cfg.local_res) + "x" + std::to_string(cfg.local_res));
  return project(encode_semantic(region, p, cfg), Branch::Semantic, p, cfg);
}

}  // namespace lira::sefe
