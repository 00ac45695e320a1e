// SPDX-License-Identifier: Apache-2.0

#include "sgkit/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "sgkit/geometry.hpp"

namespace sgkit {

void EvalConfig::validate() const {
  if (ks.empty()) throw InvariantError("eval: ks must not be empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] <= 0) throw InvariantError("eval: ks must be positive");
    if (i > 0 && ks[i] <= ks[i - 1]) throw InvariantError("eval: ks must be strictly ascending");
  }
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw InvariantError("eval: iou_threshold outside [0,1]");
  }
}

double triplet_score(const SceneGraph& pred, const GraphEdge& e) {
  return pred.nodes[static_cast<std::size_t>(e.sub)].score * e.score *
         pred.nodes[static_cast<std::size_t>(e.obj)].score;
}

std::vector<int> rank_predictions(const SceneGraph& pred, bool graph_constraint) {
  std::vector<double> score(pred.edges.size());
  for (std::size_t i = 0; i < pred.edges.size(); ++i) score[i] = triplet_score(pred, pred.edges[i]);
  std::vector<int> order(pred.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });
  if (!graph_constraint) return order;
  std::set<std::pair<int, int>> seen;
  std::vector<int> kept;
  for (int i : order) {
    const GraphEdge& e = pred.edges[static_cast<std::size_t>(i)];
    if (seen.insert({e.sub, e.obj}).second) kept.push_back(i);
  }
  return kept;
}

namespace {

std::vector<int> match_ranked(const SceneGraph& pred, const SceneGraph& gt,
                              const std::vector<int>& ranked, double threshold, int k) {
  std::vector<bool> hit(gt.edges.size(), false);
  const std::size_t limit = std::min(ranked.size(), static_cast<std::size_t>(std::max(k, 0)));
  for (std::size_t r = 0; r < limit; ++r) {
    const GraphEdge& p = pred.edges[static_cast<std::size_t>(ranked[r])];
    const GraphNode& ps = pred.nodes[static_cast<std::size_t>(p.sub)];
    const GraphNode& po = pred.nodes[static_cast<std::size_t>(p.obj)];
    for (std::size_t g = 0; g < gt.edges.size(); ++g) {
      if (hit[g]) continue;
      const GraphEdge& t = gt.edges[g];
      const GraphNode& ts = gt.nodes[static_cast<std::size_t>(t.sub)];
      const GraphNode& to = gt.nodes[static_cast<std::size_t>(t.obj)];
      if (p.rel != t.rel || ps.cls != ts.cls || po.cls != to.cls) continue;
      if (iou(ps.box, ts.box) < threshold || iou(po.box, to.box) < threshold) continue;
      hit[g] = true;
      break;
    }
  }
  std::vector<int> out;
  for (std::size_t g = 0; g < hit.size(); ++g)
    if (hit[g]) out.push_back(static_cast<int>(g));
  return out;
}

}  // namespace

std::vector<int> match_triplets(const SceneGraph& pred, const SceneGraph& gt, const EvalConfig& cfg,
                                int k) {
  return match_ranked(pred, gt, rank_predictions(pred, cfg.graph_constraint), cfg.iou_threshold, k);
}

const char* to_string(EvalSplit split) {
  switch (split) {
    case EvalSplit::kAll: return "Base+Novel";
    case EvalSplit::kBase: return "Base";
    case EvalSplit::kNovel: return "Novel";
    case EvalSplit::kNovelObject: return "Novel-Object";
    case EvalSplit::kNovelRelation: return "Novel-Relation";
    case EvalSplit::kNovelBoth: return "Novel-Both";
  }
  return "?";
}

bool in_split(SplitTag tag, EvalSplit split) {
  switch (split) {
    case EvalSplit::kAll: return true;
    case EvalSplit::kBase: return tag == SplitTag::kBase;
    case EvalSplit::kNovel: return tag != SplitTag::kBase;
    case EvalSplit::kNovelObject: return tag == SplitTag::kNovelObject || tag == SplitTag::kNovelBoth;
    case EvalSplit::kNovelRelation:
      return tag == SplitTag::kNovelRelation || tag == SplitTag::kNovelBoth;
    case EvalSplit::kNovelBoth: return tag == SplitTag::kNovelBoth;
  }
  return false;
}

EvalReport evaluate(const std::vector<SceneGraph>& preds, const std::vector<SceneGraph>& gts,
                    const Vocabulary& vocab, const EvalConfig& cfg) {
  cfg.validate();
  if (preds.size() != gts.size()) {
    throw DimensionError("evaluate: " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(gts.size()) + " ground-truth images");
  }
  EvalReport report;
  report.ks = cfg.ks;

  // split -> relation -> (gt count, hits by K)
  struct Tally {
    std::size_t gt = 0;
    std::map<int, std::size_t> hits;
  };
  std::map<EvalSplit, std::map<int, Tally>> tallies;

  for (std::size_t img = 0; img < gts.size(); ++img) {
    const SceneGraph& gt = gts[img];
    const SceneGraph& pred = preds[img];
    gt.validate(&vocab, "gts[" + std::to_string(img) + "]");
    pred.validate(&vocab, "preds[" + std::to_string(img) + "]");
    const std::vector<SplitTag> tags = split_report(gt, vocab);
    const std::vector<int> ranked = rank_predictions(pred, cfg.graph_constraint);

    std::map<int, std::vector<bool>> hit_by_k;
    for (int k : cfg.ks) {
      std::vector<bool> hit(gt.edges.size(), false);
      for (int g : match_ranked(pred, gt, ranked, cfg.iou_threshold, k)) hit[static_cast<std::size_t>(g)] = true;
      hit_by_k[k] = std::move(hit);
    }
    for (std::size_t g = 0; g < gt.edges.size(); ++g) {
      for (EvalSplit split : kAllSplits) {
        if (!in_split(tags[g], split)) continue;
        Tally& t = tallies[split][gt.edges[g].rel];
        ++t.gt;
        for (int k : cfg.ks) t.hits[k] += hit_by_k[k][g] ? 1 : 0;
      }
    }
  }

  for (EvalSplit split : kAllSplits) {
    SplitResult res;
    const auto& by_rel = tallies[split];
    for (const auto& [rel, t] : by_rel) {
      res.gt_count += t.gt;
      for (int k : cfg.ks) res.hits[k] += t.hits.at(k);
    }
    if (res.gt_count > 0) {
      for (int k : cfg.ks) {
        res.recall[k] = static_cast<double>(res.hits[k]) / static_cast<double>(res.gt_count);
        double sum = 0.0;
        for (const auto& [rel, t] : by_rel) {
          const double r = static_cast<double>(t.hits.at(k)) / static_cast<double>(t.gt);
          res.per_relation[rel][k] = r;
          sum += r;
        }
        res.mean_recall[k] = sum / static_cast<double>(by_rel.size());
      }
    } else {
      for (int k : cfg.ks) res.hits[k] = 0;
    }
    report.splits[split] = std::move(res);
  }
  return report;
}

json EvalReport::to_json(const Vocabulary& vocab) const {
  json out = json::object();
  json counts = json::object();
  for (EvalSplit split : kAllSplits) {
    const SplitResult& r = splits.at(split);
    json s = json::object();
    for (int k : ks) {
      const std::string suffix = "@" + std::to_string(k);
      s["R" + suffix] = r.recall.count(k) ? json(r.recall.at(k)) : json(nullptr);
      s["mR" + suffix] = r.mean_recall.count(k) ? json(r.mean_recall.at(k)) : json(nullptr);
      s["hits" + suffix] = r.hits.at(k);
    }
    json per_rel = json::object();
    for (const auto& [rel, by_k] : r.per_relation) {
      json e = json::object();
      for (const auto& [k, v] : by_k) e["R@" + std::to_string(k)] = v;
      per_rel[vocab.relations()[static_cast<std::size_t>(rel)]] = std::move(e);
    }
    s["per_relation"] = std::move(per_rel);
    out[to_string(split)] = std::move(s);
    counts[to_string(split)] = r.gt_count;
  }
  const SplitResult& all = splits.at(EvalSplit::kAll);
  for (int k : ks) {
    const std::string key = "mR@" + std::to_string(k);
    out[key] = all.mean_recall.count(k) ? json(all.mean_recall.at(k)) : json(nullptr);
  }
  out["counts"] = std::move(counts);
  return out;
}

}  // namespace sgkit
