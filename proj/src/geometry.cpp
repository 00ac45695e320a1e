// SPDX-License-Identifier: Apache-2.0

#include "sgkit/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sgkit {

namespace {

struct Overlap {
  double inter;
  double uni;
  double hull;
};

Overlap overlap(const BoundingBox& a, const BoundingBox& b) {
  const Corners ca = a.corners();
  const Corners cb = b.corners();
  const double iw = std::max(0.0, std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1));
  const double ih = std::max(0.0, std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  const double hw = std::max(ca.x2, cb.x2) - std::min(ca.x1, cb.x1);
  const double hh = std::max(ca.y2, cb.y2) - std::min(ca.y1, cb.y1);
  return {inter, uni, hw * hh};
}

double iou_from(const Overlap& o, const BoundingBox& a, const BoundingBox& b) {
  if (o.uni <= 0.0) return a == b ? 1.0 : 0.0;
  return o.inter / o.uni;
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  const Overlap o = overlap(a, b);
  if (a.area() <= 0.0 || b.area() <= 0.0) return a == b ? 1.0 : 0.0;
  return iou_from(o, a, b);
}

double giou(const BoundingBox& a, const BoundingBox& b) {
  const Overlap o = overlap(a, b);
  const double base = iou(a, b);
  return base - (o.hull - o.uni) / std::max(o.hull, kHullEpsilon);
}

BoxPairCost box_pair_cost(const BoundingBox& pred, const BoundingBox& gt) {
  BoxPairCost c;
  c.l1 = (std::abs(pred.cx - gt.cx) + std::abs(pred.cy - gt.cy) + std::abs(pred.w - gt.w) +
          std::abs(pred.h - gt.h)) /
         4.0;
  c.giou_cost = 1.0 - giou(pred, gt);
  return c;
}

}  // namespace sgkit
