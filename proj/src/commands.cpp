// SPDX-License-Identifier: Apache-2.0

#include "sgkit/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "sgkit/assignment.hpp"
#include "sgkit/distillation.hpp"
#include "sgkit/fixtures.hpp"
#include "sgkit/grad_suite.hpp"
#include "sgkit/gradcheck.hpp"
#include "sgkit/metrics.hpp"
#include "sgkit/query_selection.hpp"
#include "sgkit/scene_model.hpp"
#include "sgkit/target_gen.hpp"
#include "sgkit/training.hpp"

namespace fs = std::filesystem;

namespace sgkit {

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const Matrix& m) { return m.to_rows(); }

json with_header(const RunConfig& rc, const std::string& command, json body) {
  body["command"] = command;
  body["seed"] = rc.seed;
  body["config_hash"] = rc.hash;
  return body;
}

void emit(const RunConfig& rc, const std::string& name, const json& doc) {
  write_file_atomic((fs::path(rc.out_dir) / name).string(), doc.dump(1) + "\n");
}

json planted_json(const PlantedScore& s) {
  return {{"true_positives", s.true_positives},
          {"predicted", s.predicted},
          {"planted", s.planted},
          {"precision", optional_number(s.precision)},
          {"recall", optional_number(s.recall)}};
}

// scene_id<TAB>caption per line; blank lines are skipped.
std::vector<std::pair<std::string, std::string>> read_captions(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw SchemaError(path + ":" + std::to_string(n) + ": expected scene_id<TAB>caption");
    }
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

int cmd_generate_targets(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("generate-targets");
  const std::string scenes_path = *rc.path(sec, "scenes", true);
  const auto captions_path = rc.path(sec, "captions", false);
  const auto table_path = rc.path(sec, "counter_actions", false);

  TargetGenConfig cfg;
  cfg.iou_threshold = sec.value("iou_threshold", cfg.iou_threshold);
  cfg.min_confidence = sec.value("min_confidence", cfg.min_confidence);
  cfg.validate();
  const std::string mode_name = sec.value("mode", std::string("interaction"));
  GenerationMode mode;
  if (mode_name == "interaction") {
    mode = GenerationMode::kInteraction;
  } else if (mode_name == "category") {
    mode = GenerationMode::kCategoryOnly;
  } else {
    throw SchemaError("generate-targets.mode: expected \"interaction\" or \"category\"");
  }

  const std::vector<ScriptedScene> scenes = load_scenes(scenes_path);
  std::map<std::string, const ScriptedScene*> by_id;
  for (const ScriptedScene& s : scenes) by_id[s.scene_id] = &s;

  std::vector<std::pair<std::string, std::string>> jobs;
  if (captions_path) {
    jobs = read_captions(*captions_path);
    for (const auto& [id, caption] : jobs) {
      if (!by_id.count(id)) throw SchemaError(*captions_path + ": unknown scene '" + id + "'");
    }
  } else {
    for (const ScriptedScene& s : scenes) jobs.emplace_back(s.scene_id, s.caption);
  }

  std::optional<TableCounterActions> table;
  if (table_path) table = TableCounterActions::load(*table_path);
  const CounterActionProvider& provider = table ? *table : TableCounterActions::builtin();

  json out_scenes = json::array(), report_scenes = json::array();
  std::vector<TripletCandidate> all_generated, all_planted;
  for (const auto& [id, caption] : jobs) {
    const ScriptedScene& scene = *by_id.at(id);
    const ScriptedGrounder grounder(scene);
    const std::vector<TripletCandidate> generated = generate_targets(caption, grounder, provider, cfg, mode);
    json cands = json::array();
    for (const TripletCandidate& t : generated) cands.push_back(triplet_to_json(t));
    out_scenes.push_back({{"scene_id", id}, {"caption", caption}, {"candidates", cands}});
    json entry = planted_json(score_against_planted(generated, scene.planted));
    entry["scene_id"] = id;
    report_scenes.push_back(entry);
    all_generated.insert(all_generated.end(), generated.begin(), generated.end());
    all_planted.insert(all_planted.end(), scene.planted.begin(), scene.planted.end());
  }
  const PlantedScore total = score_against_planted(all_generated, all_planted);

  emit(rc, "targets.json", with_header(rc, "generate-targets", {{"scenes", out_scenes}}));
  emit(rc, "targets_report.json",
       with_header(rc, "generate-targets",
                   {{"mode", mode_name},
                    {"iou_threshold", cfg.iou_threshold},
                    {"min_confidence", cfg.min_confidence},
                    {"scenes", report_scenes},
                    {"total", planted_json(total)}}));
  log << "generate-targets: " << jobs.size() << " scenes, " << total.predicted << " candidates, "
      << total.true_positives << "/" << total.planted << " planted recovered\n";
  return kExitOk;
}

json selection_json(const std::vector<int>& idx, const std::vector<double>& scores) {
  json sc = json::array();
  for (int i : idx) sc.push_back(scores[static_cast<std::size_t>(i)]);
  return {{"indices", idx}, {"scores", sc}};
}

int cmd_select_queries(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("select-queries");
  const Fixture fixture = load_fixture(*rc.path(sec, "fixture", true));
  const int k = sec.value("k", 8);
  const double gamma = sec.value("gamma", 0.5);
  SelectionConfig cfg = SelectionConfig::with_defaults(k, gamma);
  cfg.l = sec.value("l", cfg.l);
  const auto max_triplets = sec.value("max_triplets", std::size_t{10});

  json images = json::array();
  for (std::size_t g = 0; g < fixture.graphs.size(); ++g) {
    const std::string key = "visual/" + std::to_string(g);
    const auto it = fixture.embeddings.find(key);
    if (it == fixture.embeddings.end()) throw SchemaError("select-queries: fixture has no embeddings." + key);
    const EmbeddingMatrix& visual = it->second;
    cfg.validate(visual.rows());

    const StubEncoder encoder(rc.seed, visual.cols());
    const EmbeddingMatrix t_o = encode_tokens(encoder, fixture.vocab.objects());
    const EmbeddingMatrix t_r = encode_tokens(encoder, fixture.vocab.relations());
    const EdgeCombiner combiner(rc.seed, visual.cols());
    const GlobalRelationEmbedding rln = GlobalRelationEmbedding::random(rc.seed, visual.cols());

    const std::vector<double> pass1_scores = relevance_scores(visual, t_o, t_r, cfg.gamma);
    const std::vector<int> pass1 = top_k(pass1_scores, cfg.k);
    const std::vector<TripletCandidate> predicted =
        predict_triplets(visual, pass1, t_o, t_r, fixture.vocab, combiner, rln, max_triplets);
    const InteractionPromptSet prompts = decompose_triplets(predicted);
    const EmbeddingMatrix t_in =
        prompts.pairs.empty() ? Matrix(0, visual.cols()) : encode_tokens(encoder, prompts.pairs);
    const SelectionResult pass2 = interaction_select(visual, t_in, t_o, cfg);

    json triplets = json::array();
    for (const TripletCandidate& t : predicted) triplets.push_back(triplet_to_json(t));
    images.push_back({{"image", g},
                      {"pass1", selection_json(pass1, pass1_scores)},
                      {"predicted_triplets", triplets},
                      {"interaction_prompts", prompts.pairs},
                      {"pass2",
                       {{"interaction", pass2.interaction},
                        {"missing", pass2.missing},
                        {"all", pass2.all},
                        {"scores", pass2.scores}}}});
  }
  emit(rc, "selection.json",
       with_header(rc, "select-queries",
                   {{"k", cfg.k}, {"l", cfg.l}, {"gamma", cfg.gamma}, {"images", images}}));
  log << "select-queries: " << fixture.graphs.size() << " images, K=" << cfg.k << " L=" << cfg.l << "\n";
  return kExitOk;
}

void check_aligned(const Fixture& pred, const Fixture& gt, const std::string& command) {
  if (pred.graphs.size() != gt.graphs.size()) {
    throw DimensionError(command + ": predictions have " + std::to_string(pred.graphs.size()) +
                         " images, ground truth has " + std::to_string(gt.graphs.size()));
  }
  if (!(pred.vocab == gt.vocab)) throw SchemaError(command + ": predictions and ground truth use different vocabularies");
}

// Per-node class scores: fixture embeddings "class_scores/<image>" when
// present, otherwise the node's score on its own class.
Matrix class_scores(const Fixture& pred, std::size_t image) {
  const SceneGraph& g = pred.graphs[image];
  const std::size_t classes = pred.vocab.num_objects();
  const auto it = pred.embeddings.find("class_scores/" + std::to_string(image));
  if (it != pred.embeddings.end()) {
    if (it->second.rows() != g.nodes.size() || it->second.cols() != classes) {
      throw DimensionError("class_scores/" + std::to_string(image) + ": expected " +
                           std::to_string(g.nodes.size()) + "x" + std::to_string(classes));
    }
    return it->second;
  }
  Matrix m(g.nodes.size(), classes);
  for (std::size_t n = 0; n < g.nodes.size(); ++n) m(n, static_cast<std::size_t>(g.nodes[n].cls)) = g.nodes[n].score;
  return m;
}

int cmd_match(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("match");
  const Fixture gt = load_fixture(*rc.path(sec, "ground_truth", true));
  const Fixture pred = load_fixture(*rc.path(sec, "predictions", true));
  check_aligned(pred, gt, "match");
  MatchWeights w;
  const json jw = sec.value("weights", json::object());
  w.cls = jw.value("cls", w.cls);
  w.l1 = jw.value("l1", w.l1);
  w.giou = jw.value("giou", w.giou);

  json images = json::array();
  for (std::size_t g = 0; g < gt.graphs.size(); ++g) {
    std::vector<BoundingBox> boxes;
    for (const GraphNode& n : pred.graphs[g].nodes) boxes.push_back(n.box);
    const CostMatrix cost = build_cost(boxes, class_scores(pred, g), gt.graphs[g].nodes, w,
                                       static_cast<int>(gt.vocab.num_objects()));
    const Matching m = hungarian(cost);
    json pairs = json::array();
    for (const auto& [p, t] : m.pairs) pairs.push_back({p, t});
    images.push_back({{"image", g}, {"pairs", pairs}, {"total_cost", m.total_cost}, {"cost", matrix_json(cost)}});
  }
  emit(rc, "matches.json",
       with_header(rc, "match",
                   {{"weights", {{"cls", w.cls}, {"l1", w.l1}, {"giou", w.giou}}}, {"images", images}}));
  log << "match: " << gt.graphs.size() << " images\n";
  return kExitOk;
}

int cmd_distill_check(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("distill-check");
  const Fixture fixture = load_fixture(*rc.path(sec, "fixture", true));
  DistillConfig cfg;
  cfg.beta1 = sec.value("beta1", cfg.beta1);
  cfg.beta2 = sec.value("beta2", cfg.beta2);
  cfg.validate();
  const double noise = sec.value("student_noise", 0.3);
  const auto dim = sec.value("dim", std::size_t{16});
  const double threshold = sec.value("threshold", 1e-4);
  const int directions = sec.value("directions", 16);
  if (dim == 0) throw SchemaError("distill-check.dim must be positive");

  const StubEncoder encoder(rc.seed, dim);
  const EdgeCombiner combiner(rc.seed, dim);
  const GlobalRelationEmbedding rln = GlobalRelationEmbedding::random(rc.seed, dim);

  bool ok = true;
  json images = json::array();
  for (std::size_t g = 0; g < fixture.graphs.size(); ++g) {
    const SceneGraph& graph = fixture.graphs[g];
    const std::size_t n = graph.nodes.size();
    std::mt19937_64 rng(rc.seed * 0x9e3779b97f4a7c15ULL + g);
    std::normal_distribution<double> normal(0.0, noise / std::sqrt(static_cast<double>(dim)));
    Matrix teacher_nodes(n, dim), student_nodes(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> t = encoder.encode(fixture.vocab.objects()[static_cast<std::size_t>(graph.nodes[i].cls)]);
      for (std::size_t c = 0; c < dim; ++c) {
        teacher_nodes(i, c) = t[c];
        student_nodes(i, c) = t[c] + normal(rng);
      }
    }
    std::vector<std::vector<double>> s_rows, t_rows;
    std::vector<bool> negative;
    json pairs = json::array();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        bool positive = false;
        for (const GraphEdge& e : graph.edges) {
          positive |= e.sub == static_cast<int>(a) && e.obj == static_cast<int>(b);
        }
        pairs.push_back({a, b});
        negative.push_back(!positive);
        s_rows.push_back(edge_feature(combiner, rln, student_nodes.row(a), student_nodes.row(b)));
        t_rows.push_back(edge_feature(combiner, rln, teacher_nodes.row(a), teacher_nodes.row(b)));
      }
    }
    json entry = {{"image", g}, {"pairs", pairs}, {"negative", negative}};
    const std::size_t negatives = static_cast<std::size_t>(std::count(negative.begin(), negative.end(), true));
    if (negatives < 2) {
      entry["skipped"] = "fewer than two negative pairs";
      images.push_back(entry);
      continue;
    }
    const EdgeFeatureSet teacher{Matrix::from_rows(t_rows), negative};
    const EdgeFeatureSet student{Matrix::from_rows(s_rows), negative};
    const DistillLoss vrd = vrd_loss(student, teacher);
    const DistillLoss rrd = rrd_loss(student, teacher);

    auto check = [&](const DistillLoss& dl, bool is_vrd) {
      const std::vector<double> x(student.features.data().begin(), student.features.data().end());
      const std::size_t rows = student.features.rows(), cols = student.features.cols();
      const ScalarFn f = [&](std::span<const double> p) {
        const EdgeFeatureSet s{Matrix(rows, cols, std::vector<double>(p.begin(), p.end())), negative};
        return is_vrd ? vrd_loss(s, teacher).loss : rrd_loss(s, teacher).loss;
      };
      const std::vector<double> analytic(dl.grad.data().begin(), dl.grad.data().end());
      return directional_gradient_error(f, x, analytic, directions, rc.seed + g);
    };
    const double vrd_err = check(vrd, true), rrd_err = check(rrd, false);
    ok = ok && vrd_err <= threshold && rrd_err <= threshold;

    entry["vrd"] = vrd.loss;
    entry["rrd"] = rrd.loss;
    entry["distill_total"] = cfg.beta1 * vrd.loss + cfg.beta2 * rrd.loss;
    entry["vrd_grad"] = matrix_json(vrd.grad);
    entry["rrd_grad"] = matrix_json(rrd.grad);
    entry["vrd_grad_rel_error"] = vrd_err;
    entry["rrd_grad_rel_error"] = rrd_err;
    images.push_back(entry);
  }
  emit(rc, "distill.json",
       with_header(rc, "distill-check",
                   {{"beta1", cfg.beta1},
                    {"beta2", cfg.beta2},
                    {"dim", dim},
                    {"student_noise", noise},
                    {"threshold", threshold},
                    {"directions", directions},
                    {"pass", ok},
                    {"images", images}}));
  log << "distill-check: " << fixture.graphs.size() << " images, gradients " << (ok ? "ok" : "FAILED") << "\n";
  return ok ? kExitOk : kExitVerification;
}

int cmd_gradcheck(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("gradcheck");
  GradSuiteConfig cfg;
  cfg.seed = rc.seed;
  cfg.instances = sec.value("instances", cfg.instances);
  cfg.combined_instances = sec.value("combined_instances", cfg.combined_instances);
  cfg.step = sec.value("step", cfg.step);
  cfg.threshold = sec.value("threshold", cfg.threshold);
  cfg.corrupt = sec.value("corrupt", std::string());
  if (cfg.instances < 0 || cfg.combined_instances < 0 || !(cfg.step > 0.0)) {
    throw SchemaError("gradcheck: instances must be >= 0 and step > 0");
  }
  if (!cfg.corrupt.empty() &&
      std::find(grad_suite_ops().begin(), grad_suite_ops().end(), cfg.corrupt) == grad_suite_ops().end()) {
    throw SchemaError("gradcheck.corrupt: unknown op '" + cfg.corrupt + "'");
  }

  bool ok = true;
  json ops = json::array();
  for (const OpCheck& c : run_grad_suite(cfg)) {
    ok = ok && c.pass;
    ops.push_back({{"op", c.op},
                   {"instances", c.instances},
                   {"resampled", c.skipped},
                   {"max_rel_error", c.max_rel_error},
                   {"pass", c.pass}});
    char line[128];
    std::snprintf(line, sizeof line, "  %-13s %4d  %.3e  %s\n", c.op.c_str(), c.instances, c.max_rel_error,
                  c.pass ? "PASS" : "FAIL");
    log << line;
  }
  emit(rc, "gradcheck.json",
       with_header(rc, "gradcheck",
                   {{"threshold", cfg.threshold},
                    {"step", cfg.step},
                    {"corrupt", cfg.corrupt},
                    {"ops", ops},
                    {"pass", ok}}));
  return ok ? kExitOk : kExitVerification;
}

int cmd_evaluate(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("evaluate");
  const Fixture gt = load_fixture(*rc.path(sec, "ground_truth", true));
  const Fixture pred = load_fixture(*rc.path(sec, "predictions", true));
  check_aligned(pred, gt, "evaluate");
  EvalConfig cfg;
  cfg.ks = sec.value("ks", cfg.ks);
  cfg.iou_threshold = sec.value("iou_threshold", cfg.iou_threshold);
  cfg.graph_constraint = sec.value("graph_constraint", cfg.graph_constraint);
  cfg.validate();
  const EvalReport report = evaluate(pred.graphs, gt.graphs, gt.vocab, cfg);
  json body = report.to_json(gt.vocab);
  body["iou_threshold"] = cfg.iou_threshold;
  body["graph_constraint"] = cfg.graph_constraint;
  emit(rc, "eval.json", with_header(rc, "evaluate", body));
  const SplitResult& all = report.splits.at(EvalSplit::kAll);
  log << "evaluate: " << all.gt_count << " GT triplets";
  for (int k : cfg.ks) {
    if (all.recall.count(k)) log << "  R@" << k << "=" << all.recall.at(k);
  }
  log << "\n";
  return kExitOk;
}

int cmd_generate_fixtures(const RunConfig& rc, std::ostream& log) {
  json sec = rc.section("generate-fixtures");
  sec["seed"] = rc.seed;
  const ScenarioSpec spec = ScenarioSpec::from_json(sec);
  const int n_scenes = sec.value("scripted_scenes", 20);
  if (n_scenes < 0) throw SchemaError("generate-fixtures.scripted_scenes must be >= 0");

  const Scenario sc = generate_scenario(spec);
  const fs::path out(rc.out_dir);
  save_fixture(sc.ground_truth, (out / "ground_truth.json").string());
  save_fixture(sc.perfect_predictions, (out / "predictions_perfect.json").string());
  save_fixture(sc.pattern_predictions, (out / "predictions_pattern.json").string());
  json manifest = sc.manifest.to_json();
  manifest["spec"] = spec.to_json();
  emit(rc, "manifest.json", with_header(rc, "generate-fixtures", manifest));

  const std::vector<ScriptedScene> scenes = generate_scripted_scenes(rc.seed, n_scenes);
  json sj = json::array();
  std::string captions;
  for (const ScriptedScene& s : scenes) {
    sj.push_back(scene_to_json(s));
    captions += s.scene_id + "\t" + s.caption + "\n";
  }
  emit(rc, "scenes.json", sj);
  write_file_atomic((out / "captions.tsv").string(), captions);
  log << "generate-fixtures: " << spec.n_images << " images, " << scenes.size() << " scripted scenes\n";
  return kExitOk;
}

int cmd_train_demo(const RunConfig& rc, std::ostream& log) {
  const json sec = rc.section("train-demo");
  DescentSpec spec;
  spec.seed = rc.seed;
  spec.n_images = sec.value("n_images", spec.n_images);
  spec.queries = sec.value("queries", spec.queries);
  spec.triplets = sec.value("triplets", spec.triplets);
  spec.num_classes = sec.value("num_classes", spec.num_classes);
  spec.num_relations = sec.value("num_relations", spec.num_relations);
  spec.dim = sec.value("dim", spec.dim);
  spec.student_noise = sec.value("student_noise", spec.student_noise);
  const int steps = sec.value("steps", kDefaultDescentSteps);
  const double lr = sec.value("learning_rate", kDefaultLearningRate);
  const double target = sec.value("target_reduction", 0.5);
  if (spec.n_images <= 0 || spec.queries <= 0 || spec.triplets <= 0 || spec.num_classes <= 0 ||
      spec.num_relations <= 0 || spec.dim <= 0 || steps < 0 || !(lr > 0.0)) {
    throw SchemaError("train-demo: sizes and learning_rate must be positive");
  }
  const DescentProblem problem(spec);
  const DescentResult r = gradient_descent(problem, steps, lr);
  const double reduction = 1.0 - r.losses.back() / r.losses.front();
  const bool ok = reduction >= target;
  emit(rc, "train.json",
       with_header(rc, "train-demo",
                   {{"steps", steps},
                    {"learning_rate", lr},
                    {"initial_loss", r.losses.front()},
                    {"final_loss", r.losses.back()},
                    {"reduction", reduction},
                    {"target_reduction", target},
                    {"pass", ok},
                    {"losses", r.losses}}));
  log << "train-demo: loss " << r.losses.front() << " -> " << r.losses.back() << " (" << reduction * 100.0
      << "% reduction)\n";
  return ok ? kExitOk : kExitVerification;
}

using Command = std::function<int(const RunConfig&, std::ostream&)>;

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"generate-targets", cmd_generate_targets}, {"select-queries", cmd_select_queries},
      {"match", cmd_match},                       {"distill-check", cmd_distill_check},
      {"gradcheck", cmd_gradcheck},               {"evaluate", cmd_evaluate},
      {"generate-fixtures", cmd_generate_fixtures}, {"train-demo", cmd_train_demo}};
  return table;
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"generate-targets", "select-queries", "match",
                                                 "distill-check",    "gradcheck",      "evaluate",
                                                 "generate-fixtures", "train-demo"};
  return names;
}

std::string config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json RunConfig::section(const std::string& command) const {
  if (!doc.contains(command)) return json::object();
  const json& sec = doc.at(command);
  if (!sec.is_object()) throw SchemaError("config." + command + ": expected an object");
  return sec;
}

std::optional<std::string> RunConfig::path(const json& sec, const std::string& key, bool required) const {
  if (!sec.contains(key) || sec.at(key).is_null()) {
    if (required) throw SchemaError("config: missing required path '" + key + "'");
    return std::nullopt;
  }
  if (!sec.at(key).is_string()) throw SchemaError("config: '" + key + "' must be a string path");
  fs::path p(sec.at(key).get<std::string>());
  if (p.is_relative()) p = fs::path(base_dir) / p;
  if (!fs::exists(p)) throw SchemaError("config: " + key + ": no such file '" + p.string() + "'");
  return p.string();
}

RunConfig load_run_config(const RunOptions& opts) {
  RunConfig rc;
  rc.doc = json::object();
  rc.base_dir = ".";
  if (!opts.config_path.empty()) {
    if (!fs::exists(opts.config_path)) throw SchemaError("config file not found: " + opts.config_path);
    try {
      rc.doc = json::parse(read_text_file(opts.config_path));
    } catch (const json::parse_error& e) {
      throw SchemaError(opts.config_path + ": " + e.what());
    }
    if (!rc.doc.is_object()) throw SchemaError(opts.config_path + ": top level must be an object");
    rc.base_dir = fs::path(opts.config_path).parent_path().string();
    if (rc.base_dir.empty()) rc.base_dir = ".";
  }
  for (const std::string& ov : opts.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw SchemaError("--set expects key=value, got '" + ov + "'");
    json* node = &rc.doc;
    std::string key = ov.substr(0, eq);
    for (std::size_t dot; (dot = key.find('.')) != std::string::npos; key = key.substr(dot + 1)) {
      json& child = (*node)[key.substr(0, dot)];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) throw SchemaError("--set " + ov + ": '" + key.substr(0, dot) + "' is not an object");
      node = &child;
    }
    (*node)[key] = parse_override_value(ov.substr(eq + 1));
  }
  if (opts.seed) {
    rc.doc["seed"] = *opts.seed;
  } else if (!rc.doc.contains("seed")) {
    rc.doc["seed"] = std::uint64_t{0};
  }
  const json& seed = rc.doc["seed"];
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
    throw SchemaError("config.seed must be a non-negative integer");
  }
  rc.seed = rc.doc["seed"].get<std::uint64_t>();
  rc.out_dir = opts.out_dir;
  rc.hash = config_hash(rc.doc);
  return rc;
}

int run_command(const RunOptions& opts, std::ostream& log) {
  const auto it = commands().find(opts.command);
  if (it == commands().end()) {
    log << "error: unknown command '" << opts.command << "'\n";
    return kExitInput;
  }
  try {
    const RunConfig rc = load_run_config(opts);
    fs::create_directories(rc.out_dir);
    return it->second(rc, log);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    log << "error: config: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
  }
  return kExitInput;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Interaction-aware open-vocabulary scene-graph toolkit"};
  RunOptions opts;
  std::uint64_t seed = 0;
  app.add_option("command", opts.command, "Command to run")->required()->check(CLI::IsMember(command_names()));
  app.add_option("--config", opts.config_path, "JSON config with per-command sections");
  auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides config)");
  app.add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  app.add_option("--set", opts.overrides, "Override a config value: section.key=value");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (*seed_opt) opts.seed = seed;
  return run_command(opts, std::cerr);
}

}  // namespace sgkit
