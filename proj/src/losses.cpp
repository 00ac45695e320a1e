// SPDX-License-Identifier: Apache-2.0

#include "sgkit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sgkit/geometry.hpp"

namespace sgkit {

namespace {

double clamp_logit(double x) { return std::clamp(x, -kLogitClamp, kLogitClamp); }

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossConfig::validate() const {
  if (!(focal_alpha >= 0.0 && focal_alpha <= 1.0)) throw InvariantError("focal_alpha outside [0,1]");
  if (!(focal_gamma >= 0.0)) throw InvariantError("focal_gamma must be >= 0");
}

double sigmoid(double x) {
  x = clamp_logit(x);
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

LossWithGrad focal_loss(std::span<const double> logits, int target_class, const LossConfig& cfg) {
  cfg.validate();
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= logits.size()) {
    throw InvariantError("focal_loss: target class " + std::to_string(target_class) +
                         " outside [0, " + std::to_string(logits.size()) + ")");
  }
  const double a = cfg.focal_alpha;
  const double g = cfg.focal_gamma;
  LossWithGrad out;
  out.grad.assign(logits.size(), 0.0);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double raw = logits[c];
    const double x = clamp_logit(raw);
    const bool in_range = raw == x;
    const double p = sigmoid(x);
    const double log_p = -softplus(-x);
    const double log_1mp = -softplus(x);
    double loss, dloss;
    if (static_cast<int>(c) == target_class) {
      const double q = std::pow(1.0 - p, g);
      loss = -a * q * log_p;
      // d/dx of -a (1-p)^g log p
      dloss = a * q * (g * p * log_p - (1.0 - p));
    } else {
      const double q = std::pow(p, g);
      loss = -(1.0 - a) * q * log_1mp;
      dloss = (1.0 - a) * q * (p - g * (1.0 - p) * log_1mp);
    }
    out.loss += loss;
    out.grad[c] = in_range ? dloss : 0.0;
  }
  if (cfg.reduction == Reduction::kMean && !logits.empty()) {
    const double n = static_cast<double>(logits.size());
    out.loss /= n;
    for (double& v : out.grad) v /= n;
  }
  return out;
}

LossWithGrad bce_relation_loss(std::span<const double> logits, const std::vector<bool>& targets) {
  if (logits.size() != targets.size()) {
    throw DimensionError("bce_relation_loss: " + std::to_string(logits.size()) + " scores vs " +
                         std::to_string(targets.size()) + " targets");
  }
  LossWithGrad out;
  out.grad.assign(logits.size(), 0.0);
  if (logits.empty()) return out;
  const double n = static_cast<double>(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double x = clamp_logit(logits[c]);
    const double t = targets[c] ? 1.0 : 0.0;
    // -t log p - (1-t) log(1-p)
    out.loss += t * softplus(-x) + (1.0 - t) * softplus(x);
    out.grad[c] = logits[c] == x ? (sigmoid(x) - t) / n : 0.0;
  }
  out.loss /= n;
  return out;
}

BoxRegression box_regression_loss(const BoundingBox& pred, const BoundingBox& gt) {
  BoxRegression r;
  const std::array<double, 4> d = {pred.cx - gt.cx, pred.cy - gt.cy, pred.w - gt.w, pred.h - gt.h};
  for (int i = 0; i < 4; ++i) {
    r.l1 += std::abs(d[i]) / 4.0;
    r.grad_l1[i] = sign(d[i]) / 4.0;
  }

  // GIoU = I/U - 1 + U/C with I intersection, U union, C hull area.
  const Corners a = pred.corners();
  const Corners b = gt.corners();
  const double iw_raw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih_raw = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double iw = std::max(0.0, iw_raw);
  const double ih = std::max(0.0, ih_raw);
  const double inter = iw * ih;
  const double wa = a.x2 - a.x1, ha = a.y2 - a.y1;
  const double uni = wa * ha + gt.area() - inter;
  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double hull = std::max(cw * ch, kHullEpsilon);

  r.giou = 1.0 - giou(pred, gt);
  if (uni <= 0.0) return r;

  // Partials w.r.t. the prediction's corners (x1, y1, x2, y2).
  std::array<double, 4> d_inter{}, d_area{}, d_hull{};
  if (iw_raw > 0.0 && ih_raw > 0.0) {
    d_inter[0] = a.x1 > b.x1 ? -ih : 0.0;
    d_inter[2] = a.x2 < b.x2 ? ih : 0.0;
    d_inter[1] = a.y1 > b.y1 ? -iw : 0.0;
    d_inter[3] = a.y2 < b.y2 ? iw : 0.0;
  }
  d_area = {-ha, -wa, ha, wa};
  if (cw * ch > kHullEpsilon) {
    d_hull[0] = a.x1 < b.x1 ? -ch : 0.0;
    d_hull[2] = a.x2 > b.x2 ? ch : 0.0;
    d_hull[1] = a.y1 < b.y1 ? -cw : 0.0;
    d_hull[3] = a.y2 > b.y2 ? cw : 0.0;
  }
  std::array<double, 4> d_corner{};
  for (int k = 0; k < 4; ++k) {
    const double d_uni = d_area[k] - d_inter[k];
    const double d_iou = (d_inter[k] * uni - inter * d_uni) / (uni * uni);
    const double d_ratio = (d_uni * hull - uni * d_hull[k]) / (hull * hull);
    d_corner[k] = -(d_iou + d_ratio);  // loss = 1 - giou
  }
  // x1 = cx - w/2, x2 = cx + w/2 (same for y).
  r.grad_giou[0] = d_corner[0] + d_corner[2];
  r.grad_giou[1] = d_corner[1] + d_corner[3];
  r.grad_giou[2] = 0.5 * (d_corner[2] - d_corner[0]);
  r.grad_giou[3] = 0.5 * (d_corner[3] - d_corner[1]);
  return r;
}

bool near_giou_kink(const BoundingBox& pred, const BoundingBox& gt, double tol) {
  const Corners a = pred.corners();
  const Corners b = gt.corners();
  const double gaps[] = {a.x1 - b.x1,
                         a.x2 - b.x2,
                         a.y1 - b.y1,
                         a.y2 - b.y2,
                         std::min(a.x2, b.x2) - std::max(a.x1, b.x1),
                         std::min(a.y2, b.y2) - std::max(a.y1, b.y1)};
  return std::any_of(std::begin(gaps), std::end(gaps), [&](double g) { return std::abs(g) < tol; });
}

}  // namespace sgkit
