#include "lira/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lira::nn {
namespace {

double eval(const Objective& f, const ParamStore& store, const std::string& name,
            std::size_t index) {
  ParamBinding b(store, false);
  const double v = f(b).value().item();
  if (!std::isfinite(v))
    throw std::runtime_error("objective non-finite while perturbing " + name + "[" +
                             std::to_string(index) + "]");
  return v;
}

}  // namespace

GradCheckReport grad_check(const Objective& f, ParamStore& store, GradCheckOptions opts) {
  GradCheckReport report;
  report.tol = opts.tol;

  ParamBinding tracked(store, true);
  Var loss = f(tracked);
  if (!std::isfinite(loss.value().item()))
    throw std::runtime_error("objective non-finite at the unperturbed point");
  loss.backward();
  const GradMap analytic = tracked.gradients();

  for (const auto& name : store.names()) {
    GradCheckEntry e;
    e.name = name;
    e.count = store.get(name).size();
    if (!store.is_trainable(name)) {
      report.entries.push_back(e);
      continue;
    }
    e.checked = true;
    auto it = analytic.find(name);
    const std::vector<double> zeros(e.count, 0.0);
    const auto& a = it == analytic.end() ? zeros : it->second;
    const std::size_t probes =
        opts.max_per_tensor == 0 ? e.count : std::min(e.count, opts.max_per_tensor);
    for (std::size_t j = 0; j < probes; ++j) {
      const std::size_t i = j * e.count / probes;
      double& slot = store.get_mut(name)[i];
      const double orig = slot;
      auto at = [&](double offset) {
        slot = orig + offset;
        return eval(f, store, name, i);
      };
      const double numeric =
          (8.0 * (at(opts.h) - at(-opts.h)) - (at(2.0 * opts.h) - at(-2.0 * opts.h))) /
          (12.0 * opts.h);
      slot = orig;
      const double abs_err = std::abs(a[i] - numeric);
      const double rel =
          abs_err / std::max({std::abs(a[i]), std::abs(numeric), opts.scale_floor});
      if (rel > e.max_rel_error) {
        e.max_rel_error = rel;
        e.worst_index = i;
      }
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
    }
    e.checked_count = probes;
    report.checked_scalars += e.checked_count;
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace lira::nn
