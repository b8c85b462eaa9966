#include "lira/losses.hpp"

#include <algorithm>
#include <cmath>

#include "lira/ops.hpp"

namespace lira::losses {
namespace {

void check_dims(const nn::Shape& s, const BinaryMask& gt, const char* op) {
  if (s.size() != 2 || s[0] != gt.height || s[1] != gt.width)
    throw nn::ShapeError(std::string(op) + ": prediction " + nn::shape_str(s) + " vs mask " +
                         std::to_string(gt.height) + "x" + std::to_string(gt.width));
}

}  // namespace

nn::Var mask_ce(const nn::Var& pred, const BinaryMask& gt, double clamp) {
  check_dims(pred.shape(), gt, "mask_ce");
  const auto& p = pred.value();
  const double n = static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], clamp, 1.0 - clamp);
    total -= gt.bits[i] ? std::log(q) : std::log(1.0 - q);
  }
  return nn::make_result(nn::Tensor::scalar(total / n), {pred},
                         [pp = pred.node(), bits = gt.bits, clamp, n](nn::Node& self) {
                           auto g = pp->grad_buffer();
                           const double s = self.grad[0] / n;
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             const double v = pp->value[i];
                             if (v < clamp || v > 1.0 - clamp) continue;
                             g[i] += bits[i] ? -s / v : s / (1.0 - v);
                           }
                         });
}

nn::Var dice_loss(const nn::Var& pred, const BinaryMask& gt, double eps) {
  check_dims(pred.shape(), gt, "dice_loss");
  const auto& p = pred.value();
  double inter = 0.0, sp = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] * gt.bits[i];
    sp += p[i];
    sg += gt.bits[i];
  }
  const double num = 2.0 * inter + eps, den = sp + sg + eps;
  return nn::make_result(nn::Tensor::scalar(1.0 - num / den), {pred},
                         [pp = pred.node(), bits = gt.bits, num, den](nn::Node& self) {
                           auto g = pp->grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             // d/dp_i [1 - num/den] = -(2 g_i den - num) / den^2
                             const double d = -(2.0 * bits[i] * den - num) / (den * den);
                             g[i] += self.grad[0] * d;
                           }
                         });
}

double mask_ce(const MaskMap& pred, const BinaryMask& gt, double clamp) {
  return mask_ce(nn::Var::constant(nn::Tensor({pred.height, pred.width}, pred.values)), gt, clamp)
      .value()
      .item();
}

double dice_loss(const MaskMap& pred, const BinaryMask& gt, double eps) {
  return dice_loss(nn::Var::constant(nn::Tensor({pred.height, pred.width}, pred.values)), gt, eps)
      .value()
      .item();
}

LossReport combine(double text, double ce, double dice, const LossConfig& cfg) {
  LossReport r;
  r.text = text;
  r.ce = ce;
  r.dice = dice;
  r.mask = cfg.w_ce * ce + cfg.w_dice * dice;
  r.total = text + cfg.alpha * r.mask;
  return r;
}

CombinedLoss combined_loss(const nn::Var& text, std::span<const MaskPair> masks,
                           const LossConfig& cfg) {
  if (cfg.alpha < 0.0) throw std::invalid_argument("loss config: alpha must be >= 0");
  if (cfg.dice_eps <= 0.0) throw std::invalid_argument("loss config: dice eps must be > 0");
  if (masks.empty()) return {text, combine(text.value().item(), 0.0, 0.0, cfg)};

  std::vector<nn::Var> ce_terms, dice_terms;
  for (const auto& m : masks) {
    ce_terms.push_back(mask_ce(m.pred, *m.gt, cfg.ce_clamp));
    dice_terms.push_back(dice_loss(m.pred, *m.gt, cfg.dice_eps));
  }
  const nn::Var ce = nn::mean(nn::concat(ce_terms, 0));
  const nn::Var dice = nn::mean(nn::concat(dice_terms, 0));
  const nn::Var mask = nn::add(nn::scale(ce, cfg.w_ce), nn::scale(dice, cfg.w_dice));
  CombinedLoss out;
  out.total = nn::add(text, nn::scale(mask, cfg.alpha));
  out.report = combine(text.value().item(), ce.value().item(), dice.value().item(), cfg);
  return out;
}

}  // namespace lira::losses
