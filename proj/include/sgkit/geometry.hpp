// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sgkit/core.hpp"

namespace sgkit {

/// Division guard for the GIoU hull term.
inline constexpr double kHullEpsilon = 1e-12;

/// Intersection over union. Zero-area boxes give 0 unless both are
/// degenerate and identical, which gives 1.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Generalized IoU: iou - (hull - union) / hull, in [-1, 1].
double giou(const BoundingBox& a, const BoundingBox& b);

/// Spatial part of the matching cost.
struct BoxPairCost {
  double l1 = 0.0;         // mean |delta| over (cx, cy, w, h)
  double giou_cost = 0.0;  // 1 - giou, in [0, 2]
};

BoxPairCost box_pair_cost(const BoundingBox& pred, const BoundingBox& gt);

}  // namespace sgkit
