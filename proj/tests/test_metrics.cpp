// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "sgkit/geometry.hpp"
#include "sgkit/metrics.hpp"

using namespace sgkit;

namespace {

Vocabulary vocab() { return Vocabulary({"man", "horse", "kite", "hat"}, {"ride", "fly", "wear"}, {0, 1, 2}, {0, 1}); }

// Boxes on a coarse grid never overlap one another.
BoundingBox cell(int i) { return {0.1 + 0.2 * (i % 5), 0.1 + 0.2 * (i / 5), 0.1, 0.1}; }

// Largest one-to-one matching between the top-K predictions and GT edges,
// found by trying every assignment.
std::size_t exhaustive_hits(const SceneGraph& pred, const SceneGraph& gt, int k, double thr) {
  std::vector<int> order = rank_predictions(pred, false);
  if (static_cast<int>(order.size()) > k) order.resize(static_cast<std::size_t>(k));
  auto ok = [&](int p, std::size_t g) {
    const GraphEdge& pe = pred.edges[static_cast<std::size_t>(p)];
    const GraphEdge& ge = gt.edges[g];
    const GraphNode& ps = pred.nodes[static_cast<std::size_t>(pe.sub)];
    const GraphNode& po = pred.nodes[static_cast<std::size_t>(pe.obj)];
    const GraphNode& gs = gt.nodes[static_cast<std::size_t>(ge.sub)];
    const GraphNode& go = gt.nodes[static_cast<std::size_t>(ge.obj)];
    return pe.rel == ge.rel && ps.cls == gs.cls && po.cls == go.cls && iou(ps.box, gs.box) >= thr &&
           iou(po.box, go.box) >= thr;
  };
  std::vector<bool> used(gt.edges.size(), false);
  std::function<std::size_t(std::size_t)> best = [&](std::size_t i) -> std::size_t {
    if (i == order.size()) return 0;
    std::size_t b = best(i + 1);
    for (std::size_t g = 0; g < gt.edges.size(); ++g) {
      if (!used[g] && ok(order[i], g)) {
        used[g] = true;
        b = std::max(b, 1 + best(i + 1));
        used[g] = false;
      }
    }
    return b;
  };
  return best(0);
}

}  // namespace

TEST(MatchTriplets, PerfectAndEmpty) {
  SceneGraph gt;
  for (int i = 0; i < 6; ++i) gt.nodes.push_back({cell(i), i % 4, 1.0});
  gt.edges = {{0, 1, 0, 1.0}, {2, 3, 1, 1.0}, {4, 5, 2, 1.0}};
  EXPECT_EQ(match_triplets(gt, gt, EvalConfig{}, 3), (std::vector<int>{0, 1, 2}));
  SceneGraph empty;
  EXPECT_TRUE(match_triplets(empty, gt, EvalConfig{}, 20).empty());
}

TEST(MatchTriplets, FiveGtPattern) {
  SceneGraph gt;
  for (int i = 0; i < 10; ++i) gt.nodes.push_back({cell(i), i % 4, 1.0});
  for (int e = 0; e < 5; ++e) gt.edges.push_back({2 * e, 2 * e + 1, e % 3, 1.0});
  SceneGraph pred;
  pred.nodes = gt.nodes;
  pred.edges = {
      {0, 1, 0, 0.9},                  // correct, rank 0
      {2, 3, 1, 0.8},                  // correct, rank 1
      {4, 5, 0, 0.7},                  // wrong relation
      {6, 7, 1, 0.6},                  // wrong relation
      {8, 9, (4 % 3), 0.1},            // correct but ranked below K
      {1, 0, 1, 0.5},                  // filler
  };
  const auto hits = match_triplets(pred, gt, EvalConfig{}, 4);
  EXPECT_EQ(hits, (std::vector<int>{0, 1}));
  EXPECT_EQ(hits.size(), exhaustive_hits(pred, gt, 4, 0.5));
  EXPECT_EQ(match_triplets(pred, gt, EvalConfig{}, 6).size(), 3u);
}

TEST(MatchTriplets, RandomInstancesAgreeWithExhaustiveMatcher) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0), jitter(-0.02, 0.02);
  for (int t = 0; t < 60; ++t) {
    SceneGraph gt, pred;
    const int n = 4 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) gt.nodes.push_back({cell(i), static_cast<int>(rng() % 2), 1.0});
    for (int e = 0; e < 5; ++e) {
      const int a = static_cast<int>(rng() % n);
      gt.edges.push_back({a, (a + 1) % n, static_cast<int>(rng() % 2), 1.0});
    }
    for (const GraphNode& g : gt.nodes) {
      BoundingBox b = g.box;
      b.cx += jitter(rng);
      pred.nodes.push_back({b, g.cls, 0.5 + 0.5 * u(rng)});
    }
    for (int e = 0; e < 8; ++e) {
      const int a = static_cast<int>(rng() % n);
      pred.edges.push_back({a, (a + 1 + static_cast<int>(rng() % (n - 1))) % n, static_cast<int>(rng() % 2), u(rng)});
    }
    for (int k : {1, 3, 8}) {
      EXPECT_EQ(match_triplets(pred, gt, EvalConfig{}, k).size(), exhaustive_hits(pred, gt, k, 0.5));
    }
  }
}

TEST(MatchTriplets, IouGateAndGraphConstraint) {
  SceneGraph gt;
  gt.nodes = {{cell(0), 0, 1.0}, {cell(1), 1, 1.0}};
  gt.edges = {{0, 1, 0, 1.0}};
  SceneGraph pred = gt;
  pred.nodes[0].box.cx += 0.08;  // IoU 0.11
  EXPECT_TRUE(match_triplets(pred, gt, EvalConfig{}, 10).empty());
  EvalConfig loose;
  loose.iou_threshold = 0.1;
  EXPECT_EQ(match_triplets(pred, gt, loose, 10).size(), 1u);

  SceneGraph two = gt;
  two.edges = {{0, 1, 1, 0.9}, {0, 1, 0, 0.8}};
  EvalConfig constrained;
  constrained.graph_constraint = true;
  EXPECT_EQ(match_triplets(two, gt, EvalConfig{}, 10).size(), 1u);
  EXPECT_TRUE(match_triplets(two, gt, constrained, 10).empty());
  EXPECT_EQ(rank_predictions(two, true), (std::vector<int>{0}));
}

TEST(TripletScore, Product) {
  SceneGraph g;
  g.nodes = {{cell(0), 0, 0.5}, {cell(1), 1, 0.4}};
  EXPECT_DOUBLE_EQ(triplet_score(g, {0, 1, 0, 0.5}), 0.1);
}

TEST(Evaluate, PerfectAndSilentPredictors) {
  const Vocabulary v = vocab();
  SceneGraph gt;
  for (int i = 0; i < 8; ++i) gt.nodes.push_back({cell(i), i % 4, 1.0});
  gt.edges = {{0, 1, 0, 1.0}, {2, 3, 2, 1.0}, {4, 7, 1, 1.0}, {6, 5, 2, 1.0}};
  const EvalReport perfect = evaluate({gt}, {gt}, v, EvalConfig{});
  SceneGraph silent;
  silent.nodes = gt.nodes;
  const EvalReport none = evaluate({silent}, {gt}, v, EvalConfig{});
  for (EvalSplit s : kAllSplits) {
    if (perfect.splits.at(s).gt_count == 0) continue;
    for (int k : {20, 50, 100}) {
      EXPECT_EQ(perfect.splits.at(s).recall.at(k), 1.0) << to_string(s);
      EXPECT_EQ(perfect.splits.at(s).mean_recall.at(k), 1.0);
      EXPECT_EQ(none.splits.at(s).recall.at(k), 0.0);
    }
  }
  EXPECT_THROW(evaluate({gt, gt}, {gt}, v, EvalConfig{}), DimensionError);
}

TEST(Evaluate, MeanRecallByHand) {
  const Vocabulary v = vocab();
  SceneGraph gt;
  for (int i = 0; i < 8; ++i) gt.nodes.push_back({cell(i), 0, 1.0});
  // Three "ride" edges and one "fly" edge; predictions hit one ride and the fly.
  gt.edges = {{0, 1, 0, 1.0}, {2, 3, 0, 1.0}, {4, 5, 0, 1.0}, {6, 7, 1, 1.0}};
  SceneGraph pred;
  pred.nodes = gt.nodes;
  pred.edges = {{0, 1, 0, 0.9}, {6, 7, 1, 0.8}};
  EvalConfig cfg;
  cfg.ks = {1, 2};
  const EvalReport r = evaluate({pred}, {gt}, v, cfg);
  const SplitResult& all = r.splits.at(EvalSplit::kAll);
  EXPECT_DOUBLE_EQ(all.recall.at(1), 0.25);
  EXPECT_DOUBLE_EQ(all.mean_recall.at(1), (1.0 / 3.0 + 0.0) / 2.0);
  EXPECT_DOUBLE_EQ(all.recall.at(2), 0.5);
  EXPECT_DOUBLE_EQ(all.mean_recall.at(2), (1.0 / 3.0 + 1.0) / 2.0);
  // ride is base, fly is base, man is base: everything lands in Base.
  EXPECT_EQ(r.splits.at(EvalSplit::kBase).gt_count, 4u);
  EXPECT_EQ(r.splits.at(EvalSplit::kNovel).gt_count, 0u);
  const json j = r.to_json(v);
  EXPECT_TRUE(j["Novel"]["R@1"].is_null());
  EXPECT_DOUBLE_EQ(j["Base+Novel"]["R@2"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["mR@2"].get<double>(), all.mean_recall.at(2));
  EXPECT_EQ(j["counts"]["Base"].get<int>(), 4);
}

TEST(Evaluate, SplitMembership) {
  EXPECT_TRUE(in_split(SplitTag::kNovelBoth, EvalSplit::kNovelObject));
  EXPECT_TRUE(in_split(SplitTag::kNovelBoth, EvalSplit::kNovelRelation));
  EXPECT_FALSE(in_split(SplitTag::kBase, EvalSplit::kNovel));
  EXPECT_TRUE(in_split(SplitTag::kBase, EvalSplit::kAll));
  EXPECT_FALSE(in_split(SplitTag::kNovelObject, EvalSplit::kNovelRelation));
}

TEST(EvalConfig, Validation) {
  EvalConfig c;
  c.ks = {};
  EXPECT_THROW(c.validate(), InvariantError);
  c.ks = {0};
  EXPECT_THROW(c.validate(), InvariantError);
  c.ks = {10};
  c.iou_threshold = 1.5;
  EXPECT_THROW(c.validate(), InvariantError);
}
