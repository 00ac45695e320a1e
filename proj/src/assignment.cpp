// SPDX-License-Identifier: Apache-2.0

#include "sgkit/assignment.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "sgkit/geometry.hpp"

namespace sgkit {

CostMatrix build_cost(const std::vector<BoundingBox>& pred_boxes, const Matrix& class_scores,
                      const std::vector<GraphNode>& gt, const MatchWeights& weights,
                      int num_classes) {
  if (weights.cls < 0.0 || weights.l1 < 0.0 || weights.giou < 0.0) {
    throw InvariantError("build_cost: weights must be non-negative");
  }
  if (class_scores.rows() != pred_boxes.size()) {
    throw DimensionError("build_cost: " + std::to_string(class_scores.rows()) +
                         " score rows for " + std::to_string(pred_boxes.size()) + " predictions");
  }
  if (!pred_boxes.empty() && class_scores.cols() != static_cast<std::size_t>(num_classes)) {
    throw DimensionError("build_cost: score rows have " + std::to_string(class_scores.cols()) +
                         " columns, vocabulary has " + std::to_string(num_classes) + " classes");
  }
  CostMatrix cost(pred_boxes.size(), gt.size());
  for (std::size_t i = 0; i < pred_boxes.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const int cls = gt[j].cls;
      if (cls < 0 || cls >= num_classes) {
        throw DimensionError("build_cost: gt[" + std::to_string(j) + "] class " +
                             std::to_string(cls) + " outside score columns");
      }
      const BoxPairCost bc = box_pair_cost(pred_boxes[i], gt[j].box);
      cost(i, j) = -weights.cls * class_scores(i, cls) + weights.l1 * bc.l1 +
                   weights.giou * bc.giou_cost;
    }
  }
  return cost;
}

namespace {

// Rows <= cols. Returns, for each row, the assigned column.
std::vector<int> solve(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> row_of(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (row_of[j] != 0) col_of_row[row_of[j] - 1] = static_cast<int>(j - 1);
  }
  return col_of_row;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

}  // namespace

Matching hungarian(const CostMatrix& cost) {
  Matching out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (!cost.all_finite()) throw InvariantError("hungarian: cost matrix has non-finite cells");

  if (cost.rows() <= cost.cols()) {
    const std::vector<int> col = solve(cost);
    for (std::size_t r = 0; r < col.size(); ++r) out.pairs.emplace_back(static_cast<int>(r), col[r]);
  } else {
    const std::vector<int> row = solve(transpose(cost));
    for (std::size_t c = 0; c < row.size(); ++c) out.pairs.emplace_back(row[c], static_cast<int>(c));
    std::sort(out.pairs.begin(), out.pairs.end());
  }
  for (const auto& [p, g] : out.pairs) out.total_cost += cost(p, g);
  return out;
}

}  // namespace sgkit
