// SPDX-License-Identifier: Apache-2.0
//
// Supervised objectives: sigmoid focal loss for entities, BCE for relations,
// and L1 + GIoU box regression. Every loss returns its gradient alongside the
// value.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

/// Logits are clamped to [-kLogitClamp, kLogitClamp] before exponentiation.
inline constexpr double kLogitClamp = 30.0;

enum class Reduction { kMean, kSum };

struct LossConfig {
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  Reduction reduction = Reduction::kMean;

  void validate() const;
};

struct LossWithGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

double sigmoid(double x);

/// Per-class sigmoid focal loss with a single positive class.
LossWithGrad focal_loss(std::span<const double> logits, int target_class, const LossConfig& cfg);

/// Mean binary cross-entropy with logits over multi-hot targets.
LossWithGrad bce_relation_loss(std::span<const double> logits, const std::vector<bool>& targets);

/// Gradients are with respect to the prediction's (cx, cy, w, h).
struct BoxRegression {
  double l1 = 0.0;
  double giou = 0.0;  // 1 - GIoU
  std::array<double, 4> grad_l1{};
  std::array<double, 4> grad_giou{};
};

BoxRegression box_regression_loss(const BoundingBox& pred, const BoundingBox& gt);

/// True when any pair of corresponding edges of the two boxes (or an
/// intersection extent) is within `tol`; GIoU has kinks there and its
/// gradient is one-sided.
bool near_giou_kink(const BoundingBox& pred, const BoundingBox& gt, double tol = 1e-4);

}  // namespace sgkit
