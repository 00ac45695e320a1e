// SPDX-License-Identifier: Apache-2.0

#include "sgkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace sgkit {

bool BoundingBox::is_valid() const {
  return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
         cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 && w > 0.0 && w <= 1.0 && h > 0.0 &&
         h <= 1.0;
}

void validate_box(const BoundingBox& box, const std::string& where) {
  if (!box.is_valid()) {
    std::ostringstream os;
    os << where << ": invalid box (cx=" << box.cx << ", cy=" << box.cy << ", w=" << box.w
       << ", h=" << box.h << "); need cx,cy in [0,1] and w,h in (0,1]";
    throw InvariantError(os.str());
  }
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data size " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw DimensionError("Matrix::from_rows: row " + std::to_string(r) + " has " +
                           std::to_string(rows[r].size()) + " entries, expected " +
                           std::to_string(cols));
    }
    data.insert(data.end(), rows[r].begin(), rows[r].end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto src = row(r);
    out[r].assign(src.begin(), src.end());
  }
  return out;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// Vocabulary

namespace {

void check_unique(const std::vector<std::string>& names, const char* what) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) {
      throw InvariantError(std::string("vocabulary.") + what + "[" + std::to_string(i) +
                           "]: empty class name");
    }
    if (!seen.insert(names[i]).second) {
      throw InvariantError(std::string("vocabulary.") + what + "[" + std::to_string(i) +
                           "]: duplicate class name '" + names[i] + "'");
    }
  }
}

std::vector<bool> base_mask(std::vector<int>& ids, std::size_t n, const char* what) {
  std::sort(ids.begin(), ids.end());
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw InvariantError(std::string("vocabulary.") + what + ": id " + std::to_string(id) +
                           " outside [0, " + std::to_string(n) + ")");
    }
    if (mask[id]) {
      throw InvariantError(std::string("vocabulary.") + what + ": duplicate id " +
                           std::to_string(id));
    }
    mask[id] = true;
  }
  return mask;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> objects, std::vector<std::string> relations,
                       std::vector<int> base_objects, std::vector<int> base_relations)
    : objects_(std::move(objects)),
      relations_(std::move(relations)),
      base_objects_(std::move(base_objects)),
      base_relations_(std::move(base_relations)) {
  check_unique(objects_, "objects");
  check_unique(relations_, "relations");
  object_is_base_ = base_mask(base_objects_, objects_.size(), "base_objects");
  relation_is_base_ = base_mask(base_relations_, relations_.size(), "base_relations");
}

bool Vocabulary::is_base_object(int id) const {
  if (id < 0 || id >= num_objects()) {
    throw InvariantError("object class id " + std::to_string(id) + " outside [0, " +
                         std::to_string(num_objects()) + ")");
  }
  return object_is_base_[id];
}

bool Vocabulary::is_base_relation(int id) const {
  if (id < 0 || id >= num_relations()) {
    throw InvariantError("relation class id " + std::to_string(id) + " outside [0, " +
                         std::to_string(num_relations()) + ")");
  }
  return relation_is_base_[id];
}

std::vector<int> Vocabulary::novel_objects() const {
  std::vector<int> out;
  for (int i = 0; i < num_objects(); ++i)
    if (!object_is_base_[i]) out.push_back(i);
  return out;
}

std::vector<int> Vocabulary::novel_relations() const {
  std::vector<int> out;
  for (int i = 0; i < num_relations(); ++i)
    if (!relation_is_base_[i]) out.push_back(i);
  return out;
}

int Vocabulary::object_id(const std::string& name) const {
  auto it = std::find(objects_.begin(), objects_.end(), name);
  return it == objects_.end() ? -1 : static_cast<int>(it - objects_.begin());
}

int Vocabulary::relation_id(const std::string& name) const {
  auto it = std::find(relations_.begin(), relations_.end(), name);
  return it == relations_.end() ? -1 : static_cast<int>(it - relations_.begin());
}

// ---------------------------------------------------------------------------
// SceneGraph / TripletCandidate

namespace {

std::string prefixed(const std::string& where, const std::string& field) {
  return where.empty() ? field : where + "." + field;
}

void check_score(double s, const std::string& where) {
  if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
    throw InvariantError(where + ": score " + std::to_string(s) + " outside [0,1]");
  }
}

}  // namespace

void SceneGraph::validate(const Vocabulary* vocab, const std::string& where) const {
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    const std::string at = prefixed(where, "nodes[" + std::to_string(i) + "]");
    validate_box(nodes[i].box, at + ".box");
    check_score(nodes[i].score, at + ".score");
    if (vocab && (nodes[i].cls < 0 || nodes[i].cls >= vocab->num_objects())) {
      throw InvariantError(at + ".class: id " + std::to_string(nodes[i].cls) +
                           " outside vocabulary of " + std::to_string(vocab->num_objects()));
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const GraphEdge& edge = edges[e];
    const std::string at = prefixed(where, "edges[" + std::to_string(e) + "]");
    if (edge.sub < 0 || edge.sub >= n) {
      throw InvariantError(at + ".subject: node index " + std::to_string(edge.sub) +
                           " out of range (" + std::to_string(n) + " nodes)");
    }
    if (edge.obj < 0 || edge.obj >= n) {
      throw InvariantError(at + ".object: node index " + std::to_string(edge.obj) +
                           " out of range (" + std::to_string(n) + " nodes)");
    }
    if (edge.sub == edge.obj) {
      throw InvariantError(at + ": self-relation on node " + std::to_string(edge.sub));
    }
    check_score(edge.score, at + ".score");
    if (vocab && (edge.rel < 0 || edge.rel >= vocab->num_relations())) {
      throw InvariantError(at + ".relation: id " + std::to_string(edge.rel) +
                           " outside vocabulary of " + std::to_string(vocab->num_relations()));
    }
  }
}

void TripletCandidate::validate() const {
  if (subject.empty() || relation.empty() || object.empty()) {
    throw InvariantError("triplet: empty label");
  }
  validate_box(subject_box, "triplet.subject_box");
  validate_box(object_box, "triplet.object_box");
  check_score(confidence, "triplet.confidence");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(prefixed(where, key) + ": missing");
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + ": expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + ": expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  return j;
}

std::string idx(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

std::vector<std::string> string_list(const json& j, const std::string& where) {
  std::vector<std::string> out;
  const json& arr = as_array(j, where);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_string(arr[i], idx(where, i)));
  return out;
}

std::vector<int> int_list(const json& j, const std::string& where) {
  std::vector<int> out;
  const json& arr = as_array(j, where);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_int(arr[i], idx(where, i)));
  return out;
}

}  // namespace

json box_to_json(const BoundingBox& box) { return json::array({box.cx, box.cy, box.w, box.h}); }

BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw SchemaError(where + ": expected [cx, cy, w, h]");
  BoundingBox b{as_number(j[0], idx(where, 0)), as_number(j[1], idx(where, 1)),
                as_number(j[2], idx(where, 2)), as_number(j[3], idx(where, 3))};
  validate_box(b, where);
  return b;
}

json triplet_to_json(const TripletCandidate& t) {
  return json{{"subject", t.subject},
              {"relation", t.relation},
              {"object", t.object},
              {"subject_box", box_to_json(t.subject_box)},
              {"object_box", box_to_json(t.object_box)},
              {"confidence", t.confidence}};
}

TripletCandidate triplet_from_json(const json& j, const std::string& where) {
  TripletCandidate t;
  t.subject = as_string(require(j, "subject", where), prefixed(where, "subject"));
  t.relation = as_string(require(j, "relation", where), prefixed(where, "relation"));
  t.object = as_string(require(j, "object", where), prefixed(where, "object"));
  t.subject_box = box_from_json(require(j, "subject_box", where), prefixed(where, "subject_box"));
  t.object_box = box_from_json(require(j, "object_box", where), prefixed(where, "object_box"));
  if (j.contains("confidence")) {
    t.confidence = as_number(j["confidence"], prefixed(where, "confidence"));
  }
  try {
    t.validate();
  } catch (const InvariantError& e) {
    throw InvariantError(where + ": " + e.what());
  }
  return t;
}

Fixture parse_fixture(const json& doc) {
  Fixture fx;
  const json& v = require(doc, "vocabulary", "");
  fx.vocab = Vocabulary(string_list(require(v, "objects", "vocabulary"), "vocabulary.objects"),
                        string_list(require(v, "relations", "vocabulary"), "vocabulary.relations"),
                        int_list(require(v, "base_objects", "vocabulary"), "vocabulary.base_objects"),
                        int_list(require(v, "base_relations", "vocabulary"),
                                 "vocabulary.base_relations"));

  const json& graphs = as_array(require(doc, "graphs", ""), "graphs");
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const std::string gw = idx("graphs", g);
    SceneGraph sg;
    const json& nodes = as_array(require(graphs[g], "nodes", gw), gw + ".nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string nw = idx(gw + ".nodes", i);
      GraphNode n;
      n.box = box_from_json(require(nodes[i], "box", nw), nw + ".box");
      n.cls = as_int(require(nodes[i], "class", nw), nw + ".class");
      n.score = nodes[i].contains("score") ? as_number(nodes[i]["score"], nw + ".score") : 1.0;
      sg.nodes.push_back(n);
    }
    const json& edges = as_array(require(graphs[g], "edges", gw), gw + ".edges");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::string ew = idx(gw + ".edges", e);
      GraphEdge ed;
      ed.sub = as_int(require(edges[e], "sub", ew), ew + ".subject");
      ed.obj = as_int(require(edges[e], "obj", ew), ew + ".object");
      ed.rel = as_int(require(edges[e], "rel", ew), ew + ".relation");
      ed.score = edges[e].contains("score") ? as_number(edges[e]["score"], ew + ".score") : 1.0;
      sg.edges.push_back(ed);
    }
    sg.validate(&fx.vocab, gw);
    fx.graphs.push_back(std::move(sg));
  }

  if (doc.contains("embeddings")) {
    const json& emb = doc["embeddings"];
    if (!emb.is_object()) throw SchemaError("embeddings: expected an object");
    for (auto it = emb.begin(); it != emb.end(); ++it) {
      const std::string ew = "embeddings." + it.key();
      const int dim = as_int(require(it.value(), "dim", ew), ew + ".dim");
      if (dim < 0) throw InvariantError(ew + ".dim: negative");
      const json& rows = as_array(require(it.value(), "rows", ew), ew + ".rows");
      std::vector<double> data;
      data.reserve(rows.size() * static_cast<std::size_t>(dim));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string rw = idx(ew + ".rows", r);
        const json& row = as_array(rows[r], rw);
        if (row.size() != static_cast<std::size_t>(dim)) {
          throw SchemaError(rw + ": has " + std::to_string(row.size()) + " entries, dim is " +
                            std::to_string(dim));
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
          const double val = as_number(row[c], idx(rw, c));
          if (!std::isfinite(val)) throw InvariantError(idx(rw, c) + ": non-finite entry");
          data.push_back(val);
        }
      }
      fx.embeddings.emplace(it.key(), Matrix(rows.size(), static_cast<std::size_t>(dim),
                                             std::move(data)));
    }
  }
  return fx;
}

json fixture_to_json(const Fixture& fx) {
  json doc;
  doc["vocabulary"] = {{"objects", fx.vocab.objects()},
                       {"relations", fx.vocab.relations()},
                       {"base_objects", fx.vocab.base_objects()},
                       {"base_relations", fx.vocab.base_relations()}};
  json graphs = json::array();
  for (const SceneGraph& g : fx.graphs) {
    json nodes = json::array();
    for (const GraphNode& n : g.nodes) {
      nodes.push_back({{"box", box_to_json(n.box)}, {"class", n.cls}, {"score", n.score}});
    }
    json edges = json::array();
    for (const GraphEdge& e : g.edges) {
      edges.push_back({{"sub", e.sub}, {"obj", e.obj}, {"rel", e.rel}, {"score", e.score}});
    }
    graphs.push_back({{"nodes", std::move(nodes)}, {"edges", std::move(edges)}});
  }
  doc["graphs"] = std::move(graphs);
  if (!fx.embeddings.empty()) {
    json emb = json::object();
    for (const auto& [name, m] : fx.embeddings) {
      emb[name] = {{"dim", m.cols()}, {"rows", m.to_rows()}};
    }
    doc["embeddings"] = std::move(emb);
  }
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Fixture load_fixture(const std::string& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return parse_fixture(doc);
}

void save_fixture(const Fixture& fixture, const std::string& path) {
  write_file_atomic(path, fixture_to_json(fixture).dump(1) + "\n");
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Splits

const char* to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kBase: return "base";
    case SplitTag::kNovelObject: return "novel-object";
    case SplitTag::kNovelRelation: return "novel-relation";
    case SplitTag::kNovelBoth: return "novel-both";
  }
  return "?";
}

SplitTag split_tag(int subject_cls, int object_cls, int relation_cls, const Vocabulary& vocab) {
  const bool novel_obj = !vocab.is_base_object(subject_cls) || !vocab.is_base_object(object_cls);
  const bool novel_rel = !vocab.is_base_relation(relation_cls);
  if (novel_obj && novel_rel) return SplitTag::kNovelBoth;
  if (novel_obj) return SplitTag::kNovelObject;
  if (novel_rel) return SplitTag::kNovelRelation;
  return SplitTag::kBase;
}

std::vector<SplitTag> split_report(const SceneGraph& graph, const Vocabulary& vocab) {
  std::vector<SplitTag> tags;
  tags.reserve(graph.edges.size());
  for (const GraphEdge& e : graph.edges) {
    if (e.sub < 0 || e.sub >= static_cast<int>(graph.nodes.size()) || e.obj < 0 ||
        e.obj >= static_cast<int>(graph.nodes.size())) {
      throw InvariantError("split_report: edge endpoint out of range");
    }
    tags.push_back(split_tag(graph.nodes[e.sub].cls, graph.nodes[e.obj].cls, e.rel, vocab));
  }
  return tags;
}

}  // namespace sgkit
