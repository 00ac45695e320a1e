// SPDX-License-Identifier: Apache-2.0
//
// Deterministic stand-in for the vision-language model: seeded text and
// visual token embeddings, the edge-feature MLP over
// [e_rln ; e_i ; e_j], and cosine classifiers against class embeddings.

#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

/// Maps strings to unit-norm Gaussian directions derived from (seed, string).
/// The cache is guarded, so one encoder may be shared across threads.
class StubEncoder {
 public:
  StubEncoder(std::uint64_t seed, std::size_t dim);

  std::uint64_t seed() const { return seed_; }
  std::size_t dim() const { return dim_; }

  std::vector<double> encode(const std::string& text) const;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

/// One row per string. Throws InvariantError on an empty string.
EmbeddingMatrix encode_tokens(const StubEncoder& encoder, const std::vector<std::string>& strings);

/// The refined global relation query.
struct GlobalRelationEmbedding {
  std::vector<double> values;

  /// Unit-norm Gaussian direction.
  static GlobalRelationEmbedding random(std::uint64_t seed, std::size_t dim);
};

/// Two-layer perceptron 3d -> h -> d with tanh in between.
class EdgeCombiner {
 public:
  /// Gaussian weights scaled by 1/sqrt(fan_in), small biases. hidden = 0
  /// means 2 * dim.
  EdgeCombiner(std::uint64_t seed, std::size_t dim, std::size_t hidden = 0);
  /// Explicit weights: w1 is h x 3d, w2 is d x h.
  EdgeCombiner(Matrix w1, std::vector<double> b1, Matrix w2, std::vector<double> b2);

  std::size_t dim() const { return w2_.rows(); }
  std::size_t hidden() const { return w1_.rows(); }

  const Matrix& w1() const { return w1_; }
  const std::vector<double>& b1() const { return b1_; }
  const Matrix& w2() const { return w2_; }
  const std::vector<double>& b2() const { return b2_; }

 private:
  void check() const;

  Matrix w1_;
  std::vector<double> b1_;
  Matrix w2_;
  std::vector<double> b2_;
};

/// e_ij = W2 tanh(W1 [e_rln ; e_i ; e_j] + b1) + b2.
std::vector<double> edge_feature(const EdgeCombiner& combiner, const GlobalRelationEmbedding& rln,
                                 std::span<const double> e_i, std::span<const double> e_j);

struct EdgeFeatureBackward {
  std::vector<double> d_rln;
  std::vector<double> d_i;
  std::vector<double> d_j;
};

/// Vector-Jacobian product of edge_feature for upstream gradient `d_out`.
EdgeFeatureBackward edge_feature_backward(const EdgeCombiner& combiner,
                                          const GlobalRelationEmbedding& rln,
                                          std::span<const double> e_i, std::span<const double> e_j,
                                          std::span<const double> d_out);

inline constexpr double kDefaultTemperature = 10.0;

/// score[r][c] = sigmoid(temperature * cos(features_r, classes_c)).
Matrix classify(const EmbeddingMatrix& features, const EmbeddingMatrix& class_embeddings,
                double temperature = kDefaultTemperature);

/// Box of cell `index` on a square grid with enough cells for `count` tokens.
BoundingBox token_box(std::size_t index, std::size_t count);

/// The stub model's relation head: labels every selected visual token with
/// its best object class, scores every ordered token pair through the edge
/// MLP and the relation classifier, and returns the `max_triplets` best
/// triplets by subject * relation * object score.
std::vector<TripletCandidate> predict_triplets(const EmbeddingMatrix& visual,
                                               const std::vector<int>& selected,
                                               const EmbeddingMatrix& object_tokens,
                                               const EmbeddingMatrix& relation_tokens,
                                               const Vocabulary& vocab,
                                               const EdgeCombiner& combiner,
                                               const GlobalRelationEmbedding& rln,
                                               std::size_t max_triplets);

}  // namespace sgkit
