#include "lira/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace lira::nn {
namespace {

Tensor& checked_target(ParamStore& store, const std::string& name,
                       const std::vector<double>& g) {
  if (!store.is_trainable(name))
    throw std::logic_error("gradient supplied for frozen parameter " + name);
  Tensor& t = store.get_mut(name);
  if (t.size() != g.size()) throw ShapeError("gradient size mismatch for " + name);
  return t;
}

}  // namespace

void Sgd::step(ParamStore& store, const GradMap& grads) const {
  for (const auto& [name, g] : grads) {
    Tensor& t = checked_target(store, name, g);
    for (std::size_t i = 0; i < g.size(); ++i) t[i] -= lr_ * g[i];
  }
}

void Adam::step(ParamStore& store, const GradMap& grads) {
  for (const auto& [name, g] : grads) {
    Tensor& t = checked_target(store, name, g);
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(g.size(), 0.0);
      v.assign(g.size(), 0.0);
    }
    const auto n = ++steps_[name];
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(n));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(n));
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      t[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double clip_grad_norm(GradMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads)
    for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, g] : grads)
      for (double& v : g) v *= s;
  }
  return norm;
}

}  // namespace lira::nn
