// SPDX-License-Identifier: Apache-2.0
//
// Scene-graph detection recall: R@K and mR@K with IoU-gated triplet
// matching, broken down by open-vocabulary split.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

struct EvalConfig {
  std::vector<int> ks = {20, 50, 100};
  double iou_threshold = 0.5;
  /// Keep only the best-scoring predicted relation per ordered node pair.
  bool graph_constraint = false;

  void validate() const;
};

/// Subject score * relation score * object score.
double triplet_score(const SceneGraph& pred, const GraphEdge& edge);

/// Predicted edge indices ordered by descending triplet score (ties: lower
/// index first), after the optional graph constraint.
std::vector<int> rank_predictions(const SceneGraph& pred, bool graph_constraint);

/// Sorted indices of GT edges hit by the top-K predictions. Predictions are
/// visited in rank order; each takes the lowest-index unhit GT edge with the
/// same (subject, relation, object) classes and both boxes at IoU >=
/// threshold.
std::vector<int> match_triplets(const SceneGraph& pred, const SceneGraph& gt, const EvalConfig& cfg,
                                int k);

/// Named GT subsets a report is broken down by.
enum class EvalSplit { kAll, kBase, kNovel, kNovelObject, kNovelRelation, kNovelBoth };

inline constexpr EvalSplit kAllSplits[] = {EvalSplit::kAll,         EvalSplit::kBase,
                                           EvalSplit::kNovel,       EvalSplit::kNovelObject,
                                           EvalSplit::kNovelRelation, EvalSplit::kNovelBoth};

const char* to_string(EvalSplit split);
bool in_split(SplitTag tag, EvalSplit split);

struct SplitResult {
  std::size_t gt_count = 0;
  std::map<int, std::size_t> hits;    // by K
  std::map<int, double> recall;       // R@K
  std::map<int, double> mean_recall;  // mR@K
  /// relation id -> {K -> recall}, only classes with at least one GT edge.
  std::map<int, std::map<int, double>> per_relation;
};

struct EvalReport {
  std::vector<int> ks;
  std::map<EvalSplit, SplitResult> splits;

  json to_json(const Vocabulary& vocab) const;
};

/// Throws DimensionError when the lists differ in length. A split with no GT
/// edges has empty recall maps (null in JSON).
EvalReport evaluate(const std::vector<SceneGraph>& preds, const std::vector<SceneGraph>& gts,
                    const Vocabulary& vocab, const EvalConfig& cfg);

}  // namespace sgkit
