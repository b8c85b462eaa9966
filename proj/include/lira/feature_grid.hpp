#pragma once

#include "lira/autograd.hpp"

namespace lira {

// T x D token features carried on the autograd graph.
struct FeatureGrid {
  nn::Var values;

  std::size_t tokens() const { return values.dim(0); }
  std::size_t dim() const { return values.dim(1); }
};

}  // namespace lira
