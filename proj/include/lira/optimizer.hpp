#pragma once

#include <map>
#include <string>
#include <vector>

#include "lira/param_store.hpp"

namespace lira::nn {

// Both optimizers touch only parameters in store.trainable(); gradients for
// anything else are rejected.
class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(ParamStore& store, const GradMap& grads) const;

 private:
  double lr_;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamStore& store, const GradMap& grads);
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::map<std::string, std::size_t> steps_;
  std::map<std::string, std::vector<double>> m_, v_;
};

// Global L2 clipping; returns the pre-clip norm.
double clip_grad_norm(GradMap& grads, double max_norm);

}  // namespace lira::nn
