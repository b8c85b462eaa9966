#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lira {

// Architecture hyperparameters shared by every module.
struct ModelConfig {
  std::size_t d_model = 64;   // LM width, common SEFE output width
  std::size_t heads = 4;      // LM and cross-attention heads
  std::size_t lm_layers = 2;
  std::size_t enc_dim = 32;   // width of both toy encoders
  std::size_t enc_heads = 2;
  std::size_t enc_layers = 2;
  std::size_t patch = 8;
  std::size_t canvas = 64;    // global image side
  std::size_t local_res = 32; // side of resized region crops
  std::size_t max_len = 256;  // LM positional table size
  std::size_t mlp_ratio = 4;
  std::size_t vocab_size = 0; // filled from the vocabulary

  std::size_t grid() const { return canvas / patch; }
  std::size_t global_tokens() const { return grid() * grid(); }
  std::size_t local_tokens() const { return (local_res / patch) * (local_res / patch); }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("model config: " + m); };
    if (patch == 0 || canvas % patch != 0) fail("canvas must be divisible by patch");
    if (local_res % patch != 0) fail("local_res must be divisible by patch");
    if (heads == 0 || d_model % heads != 0) fail("d_model must be divisible by heads");
    if (enc_heads == 0 || enc_dim % enc_heads != 0) fail("enc_dim must be divisible by enc_heads");
    if (vocab_size == 0) fail("vocab_size not set");
    if (max_len < 2 * global_tokens() + 2) fail("max_len too small for the global feature block");
  }
};

}  // namespace lira
