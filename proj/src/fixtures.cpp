// SPDX-License-Identifier: Apache-2.0

#include "sgkit/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "sgkit/scene_model.hpp"

namespace sgkit {

namespace {

const std::vector<std::string> kObjectNames = {
    "man",   "woman", "horse", "surfboard", "bike",  "dog",      "table", "chair",
    "shirt", "umbrella", "car", "tree",     "kite",  "boat",     "plate", "phone",
    "hat",   "bench", "street", "building", "bus",  "elephant", "cup",   "bag"};

const std::vector<std::string> kRelationNames = {
    "on",   "holding", "riding", "wearing", "near",   "has",      "in",      "behind",
    "under", "with",   "carrying", "eating", "sitting on", "watching", "above", "beside"};

std::vector<std::string> class_names(const std::vector<std::string>& pool, int n, const char* stem) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(static_cast<std::size_t>(i) < pool.size() ? pool[static_cast<std::size_t>(i)]
                                                            : std::string(stem) + std::to_string(i));
  }
  return out;
}

// Base ids after removing round(fraction * n) classes chosen by `rng`.
std::vector<int> choose_base(int n, double fraction, std::mt19937_64& rng) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto novel = static_cast<std::size_t>(std::lround(fraction * n));
  std::vector<int> base(ids.begin() + static_cast<std::ptrdiff_t>(novel), ids.end());
  std::sort(base.begin(), base.end());
  return base;
}

BoundingBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(0.2, 0.8);
  std::uniform_real_distribution<double> size(0.1, 0.4);
  return {center(rng), center(rng), size(rng), size(rng)};
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<double> noisy_unit(const std::vector<double>& base, double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, noise);
  std::vector<double> v = base;
  for (double& x : v) x += normal(rng);
  const double n = l2_norm(v);
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (n_images < 0 || triplets_per_image < 0 || distractors_per_image < 0 ||
      predictions_per_image < 0 || tokens_per_image < 0) {
    throw InvariantError("scenario: counts must be >= 0");
  }
  if (n_object_classes < 2 || n_relation_classes < 2) {
    throw InvariantError("scenario: need at least 2 object and 2 relation classes");
  }
  if (!(novel_object_fraction >= 0.0 && novel_object_fraction <= 1.0) ||
      !(novel_relation_fraction >= 0.0 && novel_relation_fraction <= 1.0)) {
    throw InvariantError("scenario: fractions must lie in [0,1]");
  }
  if (embed_dim < 1) throw InvariantError("scenario: embed_dim must be >= 1");
  if (ks.empty() || !std::is_sorted(ks.begin(), ks.end())) {
    throw InvariantError("scenario: ks must be non-empty and ascending");
  }
  const long distinct = static_cast<long>(n_object_classes) * n_object_classes * n_relation_classes;
  if (triplets_per_image > distinct / 2) {
    throw InvariantError("scenario: too many triplets for the class space");
  }
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
  ScenarioSpec s;
  s.seed = j.value("seed", s.seed);
  s.n_images = j.value("n_images", s.n_images);
  s.n_object_classes = j.value("n_object_classes", s.n_object_classes);
  s.n_relation_classes = j.value("n_relation_classes", s.n_relation_classes);
  s.triplets_per_image = j.value("triplets_per_image", s.triplets_per_image);
  s.distractors_per_image = j.value("distractors_per_image", s.distractors_per_image);
  s.novel_object_fraction = j.value("novel_object_fraction", s.novel_object_fraction);
  s.novel_relation_fraction = j.value("novel_relation_fraction", s.novel_relation_fraction);
  s.predictions_per_image = j.value("predictions_per_image", s.predictions_per_image);
  s.ks = j.value("ks", s.ks);
  s.tokens_per_image = j.value("tokens_per_image", s.tokens_per_image);
  s.embed_dim = j.value("embed_dim", s.embed_dim);
  s.validate();
  return s;
}

json ScenarioSpec::to_json() const {
  return {{"seed", seed},
          {"n_images", n_images},
          {"n_object_classes", n_object_classes},
          {"n_relation_classes", n_relation_classes},
          {"triplets_per_image", triplets_per_image},
          {"distractors_per_image", distractors_per_image},
          {"novel_object_fraction", novel_object_fraction},
          {"novel_relation_fraction", novel_relation_fraction},
          {"predictions_per_image", predictions_per_image},
          {"ks", ks},
          {"tokens_per_image", tokens_per_image},
          {"embed_dim", embed_dim}};
}

json Manifest::to_json() const {
  json images_json = json::object();
  for (const ImageManifest& m : images) {
    json planted = json::array();
    for (const TripletCandidate& t : m.planted) planted.push_back(triplet_to_json(t));
    auto by_k = [](const std::map<int, std::size_t>& hits) {
      json o = json::object();
      for (const auto& [k, n] : hits) o[std::to_string(k)] = n;
      return o;
    };
    json by_split = json::object();
    for (const auto& [split, hits] : m.expected_hits_by_split) by_split[split] = by_k(hits);
    json by_rel = json::object();
    for (const auto& [rel, hits] : m.expected_hits_by_relation) by_rel[rel] = by_k(hits);
    images_json[m.image_id] = {{"planted", std::move(planted)},
                               {"expected_hits", by_k(m.expected_hits)},
                               {"expected_hits_by_split", std::move(by_split)},
                               {"expected_hits_by_relation", std::move(by_rel)},
                               {"split_counts", m.split_counts}};
  }
  return {{"ks", ks},
          {"novel_object_classes", novel_object_classes},
          {"novel_relation_classes", novel_relation_classes},
          {"images", std::move(images_json)}};
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  const auto objects = class_names(kObjectNames, spec.n_object_classes, "object_");
  const auto relations = class_names(kRelationNames, spec.n_relation_classes, "relation_");
  const std::vector<int> base_obj = choose_base(spec.n_object_classes, spec.novel_object_fraction, rng);
  const std::vector<int> base_rel =
      choose_base(spec.n_relation_classes, spec.novel_relation_fraction, rng);
  const std::set<int> base_obj_set(base_obj.begin(), base_obj.end());
  const std::set<int> base_rel_set(base_rel.begin(), base_rel.end());
  Vocabulary vocab(objects, relations, base_obj, base_rel);

  Scenario sc;
  sc.ground_truth.vocab = vocab;
  sc.perfect_predictions.vocab = vocab;
  sc.pattern_predictions.vocab = vocab;
  sc.manifest.ks = spec.ks;
  sc.manifest.novel_object_classes = objects.size() - base_obj.size();
  sc.manifest.novel_relation_classes = relations.size() - base_rel.size();

  StubEncoder encoder(spec.seed, static_cast<std::size_t>(spec.embed_dim));

  for (int img = 0; img < spec.n_images; ++img) {
    SceneGraph gt;
    ImageManifest man;
    man.image_id = std::to_string(img);

    // Planted triplets with distinct class triples, two fresh nodes each.
    std::set<std::tuple<int, int, int>> used;
    while (static_cast<int>(gt.edges.size()) < spec.triplets_per_image) {
      const int s = uniform_int(rng, 0, spec.n_object_classes - 1);
      const int o = uniform_int(rng, 0, spec.n_object_classes - 1);
      const int r = uniform_int(rng, 0, spec.n_relation_classes - 1);
      if (!used.insert({s, r, o}).second) continue;
      const int si = static_cast<int>(gt.nodes.size());
      gt.nodes.push_back({random_box(rng), s, 1.0});
      gt.nodes.push_back({random_box(rng), o, 1.0});
      gt.edges.push_back({si, si + 1, r, 1.0});
    }
    const std::size_t interacting = gt.nodes.size();
    for (int d = 0; d < spec.distractors_per_image && interacting > 0; ++d) {
      const int src = uniform_int(rng, 0, static_cast<int>(interacting) - 1);
      gt.nodes.push_back({random_box(rng), gt.nodes[static_cast<std::size_t>(src)].cls, 1.0});
    }

    for (const GraphEdge& e : gt.edges) {
      const GraphNode& s = gt.nodes[static_cast<std::size_t>(e.sub)];
      const GraphNode& o = gt.nodes[static_cast<std::size_t>(e.obj)];
      man.planted.push_back({objects[static_cast<std::size_t>(s.cls)],
                             relations[static_cast<std::size_t>(e.rel)],
                             objects[static_cast<std::size_t>(o.cls)], s.box, o.box, 1.0});
      // Tag from the generator's own class sets.
      const bool novel_o = !base_obj_set.count(s.cls) || !base_obj_set.count(o.cls);
      const bool novel_r = !base_rel_set.count(e.rel);
      const char* tag = novel_o && novel_r ? "novel-both"
                        : novel_o          ? "novel-object"
                        : novel_r          ? "novel-relation"
                                           : "base";
      ++man.split_counts[tag];
    }

    // Pattern predictor: every GT edge gets a fate; the rest is filler.
    const int slots = std::max(spec.predictions_per_image, static_cast<int>(gt.edges.size()));
    std::vector<int> ranks(static_cast<std::size_t>(slots));
    std::iota(ranks.begin(), ranks.end(), 0);
    std::shuffle(ranks.begin(), ranks.end(), rng);

    SceneGraph pred;
    pred.nodes = gt.nodes;
    std::vector<std::pair<int, GraphEdge>> ranked;  // (rank, edge)
    std::vector<int> correct_rank(gt.edges.size(), -1);
    auto wrong_relation = [&](int s_cls, int o_cls) {
      for (int r = 0; r < spec.n_relation_classes; ++r) {
        if (!used.count({s_cls, r, o_cls})) return r;
      }
      return -1;
    };
    std::size_t next_rank = 0;
    std::uniform_real_distribution<double> fate(0.0, 1.0);
    for (std::size_t g = 0; g < gt.edges.size(); ++g) {
      const GraphEdge& e = gt.edges[g];
      const double f = fate(rng);
      if (f < 0.15) continue;  // omitted
      const int rank = ranks[next_rank++];
      if (f < 0.3) {
        const int r = wrong_relation(gt.nodes[static_cast<std::size_t>(e.sub)].cls,
                                     gt.nodes[static_cast<std::size_t>(e.obj)].cls);
        if (r >= 0) ranked.push_back({rank, {e.sub, e.obj, r, 0.0}});
        continue;
      }
      correct_rank[g] = rank;
      ranked.push_back({rank, {e.sub, e.obj, e.rel, 0.0}});
    }
    const int n_nodes = static_cast<int>(pred.nodes.size());
    while (next_rank < ranks.size() && n_nodes >= 2) {
      const int a = uniform_int(rng, 0, n_nodes - 1);
      int b = uniform_int(rng, 0, n_nodes - 2);
      if (b >= a) ++b;
      const int r = wrong_relation(pred.nodes[static_cast<std::size_t>(a)].cls,
                                   pred.nodes[static_cast<std::size_t>(b)].cls);
      if (r < 0) continue;
      ranked.push_back({ranks[next_rank++], {a, b, r, 0.0}});
    }
    for (auto& [rank, edge] : ranked) {
      edge.score = 1.0 - static_cast<double>(rank + 1) / static_cast<double>(slots + 1);
      pred.edges.push_back(edge);
    }

    for (int k : spec.ks) {
      man.expected_hits[k] = 0;
      for (std::size_t g = 0; g < gt.edges.size(); ++g) {
        const bool hit = correct_rank[g] >= 0 && correct_rank[g] < k;
        const GraphEdge& e = gt.edges[g];
        const int s_cls = gt.nodes[static_cast<std::size_t>(e.sub)].cls;
        const int o_cls = gt.nodes[static_cast<std::size_t>(e.obj)].cls;
        const bool novel_o = !base_obj_set.count(s_cls) || !base_obj_set.count(o_cls);
        const bool novel_r = !base_rel_set.count(e.rel);
        auto add = [&](const std::string& split) { man.expected_hits_by_split[split][k] += hit ? 1 : 0; };
        man.expected_hits[k] += hit ? 1 : 0;
        man.expected_hits_by_relation[relations[static_cast<std::size_t>(e.rel)]][k] += hit ? 1 : 0;
        add("Base+Novel");
        if (!novel_o && !novel_r) add("Base");
        if (novel_o || novel_r) add("Novel");
        if (novel_o) add("Novel-Object");
        if (novel_r) add("Novel-Relation");
        if (novel_o && novel_r) add("Novel-Both");
      }
    }

    // Visual tokens: one per interacting or distractor node (class direction
    // plus noise, interacting ones also carry their relation), then noise.
    const std::size_t n_tokens =
        std::max(static_cast<std::size_t>(spec.tokens_per_image), gt.nodes.size());
    EmbeddingMatrix visual(n_tokens, static_cast<std::size_t>(spec.embed_dim));
    std::vector<int> node_rel(gt.nodes.size(), -1);
    for (const GraphEdge& e : gt.edges) {
      node_rel[static_cast<std::size_t>(e.sub)] = e.rel;
      node_rel[static_cast<std::size_t>(e.obj)] = e.rel;
    }
    for (std::size_t t = 0; t < n_tokens; ++t) {
      std::vector<double> base(static_cast<std::size_t>(spec.embed_dim), 0.0);
      if (t < gt.nodes.size()) {
        const auto c = encoder.encode(objects[static_cast<std::size_t>(gt.nodes[t].cls)]);
        for (std::size_t i = 0; i < base.size(); ++i) base[i] += c[i];
        if (node_rel[t] >= 0) {
          const auto r = encoder.encode(relations[static_cast<std::size_t>(node_rel[t])]);
          for (std::size_t i = 0; i < base.size(); ++i) base[i] += 0.7 * r[i];
        }
      }
      const auto v = noisy_unit(base, t < gt.nodes.size() ? 0.15 : 0.5, rng);
      std::copy(v.begin(), v.end(), visual.row(t).begin());
    }

    sc.ground_truth.embeddings.emplace("visual/" + man.image_id, std::move(visual));
    sc.perfect_predictions.graphs.push_back(gt);
    sc.pattern_predictions.graphs.push_back(std::move(pred));
    sc.ground_truth.graphs.push_back(std::move(gt));
    sc.manifest.images.push_back(std::move(man));
  }
  return sc;
}

std::vector<ScriptedScene> generate_scripted_scenes(std::uint64_t seed, int n_scenes,
                                                    int far_distractors) {
  static const std::vector<std::string> kAgents = {"man", "woman", "boy", "girl", "person"};
  static const std::vector<std::string> kThings = {"surfboard", "horse", "bike",   "umbrella",
                                                   "kite",      "frisbee", "skateboard", "bag",
                                                   "dog",       "phone"};
  static const std::vector<std::string> kVerbs = {"hold",  "riding",  "carrying", "wearing",
                                                  "watching", "throwing", "holding", "ride"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center(0.3, 0.7);
  std::uniform_real_distribution<double> size(0.2, 0.35);
  std::uniform_real_distribution<double> shift(0.05, 0.12);
  std::uniform_real_distribution<double> conf(0.6, 0.95);
  std::uniform_real_distribution<double> far_center(0.05, 0.2);
  std::uniform_real_distribution<double> far_size(0.05, 0.1);

  std::vector<ScriptedScene> scenes;
  for (int s = 0; s < n_scenes; ++s) {
    ScriptedScene scene;
    scene.scene_id = "scene_" + std::to_string(s);
    std::vector<std::string> agents = kAgents, things = kThings;
    std::shuffle(agents.begin(), agents.end(), rng);
    std::shuffle(things.begin(), things.end(), rng);
    const int n_triplets = uniform_int(rng, 1, 2);
    std::vector<std::string> clauses;
    for (int t = 0; t < n_triplets; ++t) {
      const std::string& subj = agents[static_cast<std::size_t>(t)];
      const std::string& obj = things[static_cast<std::size_t>(t)];
      const std::string& verb = kVerbs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(kVerbs.size()) - 1))];
      const CaptionTriplet trip{subj, verb, obj};
      const BidirectionalPrompt prompts = build_prompts(trip, TableCounterActions::builtin());

      const BoundingBox o{center(rng), center(rng), size(rng), size(rng)};
      const BoundingBox sbox{o.cx + shift(rng) * o.w, o.cy, o.w, o.h};
      // Same class as the subject, overlapping the object from the other side.
      const BoundingBox near{o.cx - shift(rng) * o.w, o.cy, o.w, o.h};
      const double cs = conf(rng), co = conf(rng);

      scene.phrases[prompts.forward].push_back({sbox, cs});
      scene.phrases[prompts.forward].push_back({{o.cx, o.cy, o.w * 0.9, o.h * 0.9}, 0.1});
      scene.phrases[prompts.reverse].push_back({o, co});
      auto& bare_subj = scene.phrases[subj];
      bare_subj.push_back({sbox, cs});
      bare_subj.push_back({near, conf(rng)});
      for (int d = 0; d < far_distractors; ++d) {
        // Corners of the image, far from the central objects.
        const double cx = d % 2 == 0 ? far_center(rng) : 1.0 - far_center(rng);
        const double cy = d % 4 < 2 ? far_center(rng) : 1.0 - far_center(rng);
        bare_subj.push_back({{cx, cy, far_size(rng), far_size(rng)}, conf(rng)});
      }
      scene.phrases[obj].push_back({o, co});

      scene.planted.push_back({subj, verb, obj, sbox, o, cs * co});
      clauses.push_back((t % 2 == 0 ? "a " : "the ") + subj + " " + verb + " " + obj);
    }
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      scene.caption += (c ? " and " : "") + clauses[c];
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace sgkit
