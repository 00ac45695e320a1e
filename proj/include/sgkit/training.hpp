// SPDX-License-Identifier: Apache-2.0
//
// A small end-to-end objective over the stub model, used to show that the
// supervised and distillation losses compose into something trainable.
//
// Per image, the free parameters are the query boxes, the query entity
// logits, relation logits for every GT edge, and the student's node
// embeddings. Queries are matched to GT entities with the Hungarian solver;
// matched queries carry the box and focal losses, GT edges carry BCE on
// their relation logits, and every ordered query pair that is not a matched
// GT edge is a negative for VRD/RRD through the edge MLP.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgkit/assignment.hpp"
#include "sgkit/distillation.hpp"
#include "sgkit/losses.hpp"
#include "sgkit/scene_model.hpp"

namespace sgkit {

struct DescentSpec {
  std::uint64_t seed = 11;
  int n_images = 5;
  int queries = 6;
  int triplets = 2;
  int num_classes = 8;
  int num_relations = 6;
  int dim = 16;
  /// Std-dev of the student's initial offset from the teacher embeddings.
  double student_noise = 0.3;
};

struct ObjectiveValue {
  LossParts parts;  // averaged over images
  double total = 0.0;
  std::vector<double> grad;
};

class DescentProblem {
 public:
  explicit DescentProblem(const DescentSpec& spec);

  std::size_t num_params() const { return initial_.size(); }
  const std::vector<double>& initial_params() const { return initial_; }

  /// Loss and gradient at `params`. Matching is recomputed from `params`.
  ObjectiveValue evaluate(std::span<const double> params) const;

  /// Clamps box parameters back into the valid range in place.
  void project(std::span<double> params) const;

  const DistillConfig& distill_config() const { return distill_; }

 private:
  struct Image {
    std::vector<GraphNode> gt_nodes;
    std::vector<GraphEdge> gt_edges;
    Matrix teacher_nodes;
    std::size_t offset = 0;
  };

  std::size_t image_params() const;

  DescentSpec spec_;
  LossConfig loss_cfg_;
  DistillConfig distill_;
  MatchWeights weights_;
  EdgeCombiner combiner_;
  GlobalRelationEmbedding rln_;
  std::vector<Image> images_;
  std::vector<double> initial_;
};

struct DescentResult {
  std::vector<double> losses;  // objective before each step, then final
  std::vector<double> params;
};

inline constexpr int kDefaultDescentSteps = 200;
inline constexpr double kDefaultLearningRate = 0.05;

DescentResult gradient_descent(const DescentProblem& problem, int steps, double learning_rate);

}  // namespace sgkit
