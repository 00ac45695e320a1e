// SPDX-License-Identifier: Apache-2.0
//
// Domain types shared by every sgkit module: boxes, vocabularies with
// base/novel splits, dense row-major matrices, scene graphs, and the JSON
// fixture format that carries them between tools.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sgkit {

using json = nlohmann::json;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. The message starts with the path of the
/// offending field, e.g. "graphs[0].edges[0].subject".
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A value violates a domain invariant (range, uniqueness, finiteness).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

struct Corners {
  double x1, y1, x2, y2;
};

/// Axis-aligned box in center format, coordinates as fractions of the image.
struct BoundingBox {
  double cx = 0.5;
  double cy = 0.5;
  double w = 0.0;
  double h = 0.0;

  Corners corners() const {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  /// Area from corner extents, so that identical boxes give bit-equal
  /// intersection and area.
  double area() const {
    const Corners c = corners();
    return (c.x2 - c.x1) * (c.y2 - c.y1);
  }

  bool is_valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Throws InvariantError naming `where` when the box is invalid.
void validate_box(const BoundingBox& box, const std::string& where);

/// Dense row-major matrix of doubles. Used for visual/text token embeddings,
/// edge features, class-score tables, cost matrices and similarity matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::vector<std::vector<double>> to_rows() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rows are d-dimensional embeddings (V, T_o, T_r, T_in, node/edge features).
using EmbeddingMatrix = Matrix;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// Object and relation class names with their base (seen) subsets. Every id
/// outside a base set is novel.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Validates name uniqueness and base-id ranges; throws InvariantError.
  Vocabulary(std::vector<std::string> objects, std::vector<std::string> relations,
             std::vector<int> base_objects, std::vector<int> base_relations);

  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<std::string>& relations() const { return relations_; }
  const std::vector<int>& base_objects() const { return base_objects_; }
  const std::vector<int>& base_relations() const { return base_relations_; }

  int num_objects() const { return static_cast<int>(objects_.size()); }
  int num_relations() const { return static_cast<int>(relations_.size()); }

  bool is_base_object(int id) const;
  bool is_base_relation(int id) const;
  std::vector<int> novel_objects() const;
  std::vector<int> novel_relations() const;

  /// -1 when absent.
  int object_id(const std::string& name) const;
  int relation_id(const std::string& name) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::vector<std::string> objects_;
  std::vector<std::string> relations_;
  std::vector<int> base_objects_;    // sorted
  std::vector<int> base_relations_;  // sorted
  std::vector<bool> object_is_base_;
  std::vector<bool> relation_is_base_;
};

struct GraphNode {
  BoundingBox box;
  int cls = 0;
  double score = 1.0;
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  int sub = 0;
  int obj = 0;
  int rel = 0;
  double score = 1.0;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Detected objects and directed, labelled relations between them. Used for
/// ground truth and predictions alike.
struct SceneGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  /// Checks endpoint ranges, self-loops, score ranges and boxes. When `vocab`
  /// is given, class ids are range-checked too. `where` prefixes messages.
  void validate(const Vocabulary* vocab = nullptr, const std::string& where = "") const;

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

/// A grounded <subject, predicate, object> used as pseudo supervision.
struct TripletCandidate {
  std::string subject;
  std::string relation;
  std::string object;
  BoundingBox subject_box;
  BoundingBox object_box;
  double confidence = 1.0;

  void validate() const;
  friend bool operator==(const TripletCandidate&, const TripletCandidate&) = default;
};

/// Everything a fixture file holds.
struct Fixture {
  Vocabulary vocab;
  std::vector<SceneGraph> graphs;
  std::map<std::string, EmbeddingMatrix> embeddings;

  friend bool operator==(const Fixture&, const Fixture&) = default;
};

Fixture parse_fixture(const json& doc);
json fixture_to_json(const Fixture& fixture);
Fixture load_fixture(const std::string& path);
void save_fixture(const Fixture& fixture, const std::string& path);

json box_to_json(const BoundingBox& box);
BoundingBox box_from_json(const json& j, const std::string& where);
json triplet_to_json(const TripletCandidate& t);
TripletCandidate triplet_from_json(const json& j, const std::string& where);

/// Open-vocabulary split membership of a single relation instance.
enum class SplitTag { kBase, kNovelObject, kNovelRelation, kNovelBoth };

const char* to_string(SplitTag tag);

SplitTag split_tag(int subject_cls, int object_cls, int relation_cls, const Vocabulary& vocab);

/// One tag per edge of `graph`. Throws InvariantError on out-of-range ids.
std::vector<SplitTag> split_report(const SceneGraph& graph, const Vocabulary& vocab);

/// Reads a whole file; throws Error when it cannot be opened.
std::string read_text_file(const std::string& path);

/// Writes to `path` through a sibling temp file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace sgkit
