#include "lira/layers.hpp"

#include <cmath>

namespace lira::layers {

void init_table(nn::ParamStore& store, const std::string& name, std::size_t rows,
                std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> nd(0.0, stddev);
  nn::Tensor t({rows, cols});
  for (auto& v : t.data()) v = nd(rng);
  store.add(name, std::move(t));
}

void init_linear(nn::ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, Rng& rng, bool zero_weight) {
  if (zero_weight)
    store.add(prefix + ".w", nn::Tensor({in, out}));
  else
    init_table(store, prefix + ".w", in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  store.add(prefix + ".b", nn::Tensor({out}));
}

nn::Var linear(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x) {
  return nn::linear(x, p(prefix + ".w"), p(prefix + ".b"));
}

void init_layer_norm(nn::ParamStore& store, const std::string& prefix, std::size_t dim) {
  store.add(prefix + ".g", nn::Tensor::filled({dim}, 1.0));
  store.add(prefix + ".b", nn::Tensor({dim}));
}

nn::Var layer_norm(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x) {
  return nn::layer_norm(x, p(prefix + ".g"), p(prefix + ".b"));
}

void init_mlp(nn::ParamStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::size_t out, Rng& rng) {
  init_linear(store, prefix + ".fc1", in, hidden, rng);
  init_linear(store, prefix + ".fc2", hidden, out, rng);
}

nn::Var mlp(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x) {
  return linear(p, prefix + ".fc2", nn::gelu(linear(p, prefix + ".fc1", x)));
}

void init_block(nn::ParamStore& store, const std::string& prefix, std::size_t dim,
                std::size_t hidden, Rng& rng) {
  init_layer_norm(store, prefix + ".ln1", dim);
  init_linear(store, prefix + ".attn.q", dim, dim, rng);
  init_linear(store, prefix + ".attn.k", dim, dim, rng);
  init_linear(store, prefix + ".attn.v", dim, dim, rng);
  init_linear(store, prefix + ".attn.o", dim, dim, rng);
  init_layer_norm(store, prefix + ".ln2", dim);
  init_mlp(store, prefix + ".mlp", dim, hidden, dim, rng);
}

nn::Var block(nn::ParamBinding& p, const std::string& prefix, const nn::Var& x,
              std::size_t heads, bool causal) {
  const nn::Var h = layer_norm(p, prefix + ".ln1", x);
  const nn::Var att = nn::attention(linear(p, prefix + ".attn.q", h), linear(p, prefix + ".attn.k", h),
                                    linear(p, prefix + ".attn.v", h), heads, causal);
  const nn::Var x1 = nn::add(x, linear(p, prefix + ".attn.o", att));
  return nn::add(x1, mlp(p, prefix + ".mlp", layer_norm(p, prefix + ".ln2", x1)));
}

}  // namespace lira::layers
