#pragma once
// Differentiable tensor ops. Shapes are checked eagerly and mismatches throw
// ShapeError naming the offending shapes. Every op allocates its output; no
// op aliases an input.

#include <cstddef>
#include <span>
#include <vector>

#include "lira/autograd.hpp"

namespace lira::nn {

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

// x[M x N] (+|*) row[N], broadcast over rows.
Var add_row(const Var& x, const Var& row);
Var mul_row(const Var& x, const Var& row);

inline Var linear(const Var& x, const Var& weight, const Var& bias) {
  return add_row(matmul(x, weight), bias);
}

Var softmax(const Var& x, std::size_t axis);

// Normalizes over the last axis. The plain form has no affine parameters.
Var layer_norm(const Var& x, double eps = 1e-5);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

Var gelu(const Var& x);
Var sigmoid(const Var& x);

// Rows of table[V x D] selected by ids -> [ids.size() x D].
Var embedding_lookup(const Var& table, std::span<const std::size_t> ids);

Var concat(std::span<const Var> parts, std::size_t axis);
inline Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}
// Copies [begin, end) along axis.
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(const Var& x, Shape shape);

Var sum(const Var& x);
Var mean(const Var& x);

// Multi-head scaled dot-product attention on packed heads:
// q[Tq x D], k[Tk x D], v[Tk x D] -> [Tq x D], head width D / heads.
// causal requires Tq == Tk and masks keys after the query position.
Var attention(const Var& q, const Var& k, const Var& v, std::size_t heads, bool causal);

// Nearest-neighbour upsampling of a [gh x gw] grid to [out_h x out_w];
// out dims must be integer multiples of the grid dims.
Var upsample_nearest(const Var& grid, std::size_t out_h, std::size_t out_w);

// Mean token cross-entropy over rows whose mask entry is true.
Var cross_entropy(const Var& logits, std::span<const std::size_t> targets,
                  const std::vector<bool>& mask);

}  // namespace lira::nn
