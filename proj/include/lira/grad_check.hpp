#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lira/param_store.hpp"

namespace lira::nn {

// Scalar objective evaluated against a fresh binding of the store.
using Objective = std::function<Var(ParamBinding&)>;

struct GradCheckEntry {
  std::string name;
  bool checked = false;  // false for frozen parameters
  std::size_t count = 0;
  std::size_t checked_count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t checked_scalars = 0;
  double tol = 0.0;
  bool passed() const { return max_rel_error < tol; }
};

struct GradCheckOptions {
  // Fourth-order central stencil: (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h.
  double h = 1e-3;
  double tol = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, scale_floor), so gradients far
  // below the floor are compared in absolute terms.
  double scale_floor = 1e-6;
  // When nonzero, at most this many evenly spaced entries per tensor are probed.
  std::size_t max_per_tensor = 0;
};

// Central differences per trainable scalar versus reverse mode. Throws
// std::runtime_error naming the parameter when the objective goes non-finite.
GradCheckReport grad_check(const Objective& f, ParamStore& store, GradCheckOptions opts = {});

}  // namespace lira::nn
