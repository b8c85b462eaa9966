#pragma once
// Parameter initialisation and forward helpers for the small building blocks
// shared by the encoders, the fusion module and the language model.

#include <random>
#include <string>

#include "lira/ops.hpp"
#include "lira/param_store.hpp"

namespace lira::layers {

using Rng = std::mt19937_64;

// prefix.w [in x out] ~ N(0, 1/in), prefix.b zeros. zero_weight gives an
// all-zero weight (used for residual output projections).
void init_linear(nn::ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, Rng& rng, bool zero_weight = false);
nn::Var linear(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x);

void init_layer_norm(nn::ParamStore& store, const std::string& prefix, std::size_t dim);
nn::Var layer_norm(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x);

// Gaussian table with the given standard deviation.
void init_table(nn::ParamStore& store, const std::string& name, std::size_t rows,
                std::size_t cols, double stddev, Rng& rng);

// linear -> GELU -> linear
void init_mlp(nn::ParamStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::size_t out, Rng& rng);
nn::Var mlp(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x);

// Pre-norm transformer block: x + attn(ln1(x)), then x + mlp(ln2(x)).
void init_block(nn::ParamStore& store, const std::string& prefix, std::size_t dim,
                std::size_t hidden, Rng& rng);
nn::Var block(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x,
              std::size_t heads, bool causal);

}  // namespace lira::layers
