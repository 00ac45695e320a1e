// SPDX-License-Identifier: Apache-2.0
//
// Interaction-consistent distillation between a student and a teacher edge
// feature set. VRD pulls each negative (background) edge feature toward the
// teacher's point-wise in L1. RRD matches the cosine-similarity structure of
// the negative set, so it ignores per-row magnitude but sees how pairs relate
// to one another.

#pragma once

#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

/// One row per sampled subject/object pair. `negative[i]` marks membership
/// in the negative set N.
struct EdgeFeatureSet {
  EmbeddingMatrix features;
  std::vector<bool> negative;

  std::size_t num_negatives() const;
};

struct DistillConfig {
  double beta1 = 1.0;  // VRD weight
  double beta2 = 1.0;  // RRD weight

  void validate() const;
};

struct DistillLoss {
  double loss = 0.0;
  EmbeddingMatrix grad;  // w.r.t. student rows; zero on non-negatives
};

/// (1/|N|) * sum over negatives of ||e_S - e_T||_1.
DistillLoss vrd_loss(const EdgeFeatureSet& student, const EdgeFeatureSet& teacher);

/// M[i][j] = cos(e_i, e_j). Throws InvariantError on a zero-norm row.
Matrix structure_matrix(const EmbeddingMatrix& features);

/// (1/n^2) * ||M_S - M_T||_F^2 over the n negative rows.
DistillLoss rrd_loss(const EdgeFeatureSet& student, const EdgeFeatureSet& teacher);

struct LossParts {
  double reg = 0.0;
  double giou = 0.0;
  double obj = 0.0;
  double rel = 0.0;
  double vrd = 0.0;
  double rrd = 0.0;
};

/// reg + giou + obj + rel + beta1 * vrd + beta2 * rrd.
double total_loss(const LossParts& parts, const DistillConfig& cfg);

}  // namespace sgkit
