// SPDX-License-Identifier: Apache-2.0
//
// Bipartite matching of predicted queries to ground-truth entities.

#pragma once

#include <utility>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

/// rows = predictions, cols = ground-truth entities.
using CostMatrix = Matrix;

struct MatchWeights {
  double cls = 2.0;
  double l1 = 5.0;
  double giou = 2.0;
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (pred, gt), sorted by pred
  double total_cost = 0.0;
};

/// cost[i][j] = -w_cls * score_i[class_j] + w_l1 * l1 + w_giou * (1 - giou).
/// `class_scores` has one row per prediction and one column per object class.
CostMatrix build_cost(const std::vector<BoundingBox>& pred_boxes, const Matrix& class_scores,
                      const std::vector<GraphNode>& gt, const MatchWeights& weights,
                      int num_classes);

/// Exact minimum-cost assignment (shortest augmenting path Hungarian,
/// O(n^2 m)). The smaller side is matched completely. Among equal-cost
/// alternatives the lower index wins. total_cost is the sum of the selected
/// cells taken in increasing pred order.
Matching hungarian(const CostMatrix& cost);

}  // namespace sgkit
