#pragma once
// Mask losses (pixel BCE + soft Dice) and the combined text + mask objective.

#include <span>

#include "lira/autograd.hpp"
#include "lira/image.hpp"

namespace lira::losses {

struct LossConfig {
  double alpha = 1.0;      // weight of the mask term
  double w_ce = 1.0;
  double w_dice = 1.0;
  double dice_eps = 1.0;
  double ce_clamp = 1e-7;  // predictions clamped to [c, 1 - c] inside BCE
};

struct LossReport {
  double total = 0.0;
  double text = 0.0;
  double mask = 0.0;
  double ce = 0.0;
  double dice = 0.0;
};

// Mean binary cross-entropy of a [H x W] probability map against gt.
nn::Var mask_ce(const nn::Var& pred, const BinaryMask& gt, double clamp = 1e-7);

// 1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps)
nn::Var dice_loss(const nn::Var& pred, const BinaryMask& gt, double eps = 1.0);

double mask_ce(const MaskMap& pred, const BinaryMask& gt, double clamp = 1e-7);
double dice_loss(const MaskMap& pred, const BinaryMask& gt, double eps = 1.0);

struct MaskPair {
  nn::Var pred;
  const BinaryMask* gt;
};

struct CombinedLoss {
  nn::Var total;
  LossReport report;
};

// total = text + alpha * mask, mask = w_ce * ce + w_dice * dice with ce and
// dice averaged over the region list (zero when it is empty).
CombinedLoss combined_loss(const nn::Var& text, std::span<const MaskPair> masks,
                           const LossConfig& cfg);

// Scalar form of the same arithmetic.
LossReport combine(double text, double ce, double dice, const LossConfig& cfg);

}  // namespace lira::losses
