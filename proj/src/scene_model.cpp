// SPDX-License-Identifier: Apache-2.0

#include "sgkit/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sgkit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> gaussian_direction(std::uint64_t seed, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& x : v) x = normal(rng);
    norm = l2_norm(v);
  }
  for (double& x : v) x /= norm;
  return v;
}

Matrix gaussian_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

}  // namespace

StubEncoder::StubEncoder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
  if (dim == 0) throw InvariantError("StubEncoder: dim must be positive");
}

std::vector<double> StubEncoder::encode(const std::string& text) const {
  if (text.empty()) throw InvariantError("StubEncoder: empty string");
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(text);
  if (it != cache_.end()) return it->second;
  auto v = gaussian_direction(splitmix64(seed_ ^ splitmix64(fnv1a(text))), dim_);
  cache_.emplace(text, v);
  return v;
}

EmbeddingMatrix encode_tokens(const StubEncoder& encoder, const std::vector<std::string>& strings) {
  EmbeddingMatrix m(strings.size(), encoder.dim());
  for (std::size_t i = 0; i < strings.size(); ++i) {
    if (strings[i].empty()) {
      throw InvariantError("encode_tokens: entry " + std::to_string(i) + " is empty");
    }
    const auto v = encoder.encode(strings[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

GlobalRelationEmbedding GlobalRelationEmbedding::random(std::uint64_t seed, std::size_t dim) {
  return {gaussian_direction(splitmix64(seed ^ 0x5eedULL), dim)};
}

EdgeCombiner::EdgeCombiner(std::uint64_t seed, std::size_t dim, std::size_t hidden) {
  if (dim == 0) throw InvariantError("EdgeCombiner: dim must be positive");
  if (hidden == 0) hidden = 2 * dim;
  std::mt19937_64 rng(splitmix64(seed));
  w1_ = gaussian_matrix(rng, hidden, 3 * dim, 1.0 / std::sqrt(3.0 * static_cast<double>(dim)));
  w2_ = gaussian_matrix(rng, dim, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
  std::normal_distribution<double> small(0.0, 0.01);
  b1_.resize(hidden);
  b2_.resize(dim);
  for (double& b : b1_) b = small(rng);
  for (double& b : b2_) b = small(rng);
}

EdgeCombiner::EdgeCombiner(Matrix w1, std::vector<double> b1, Matrix w2, std::vector<double> b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
  check();
}

void EdgeCombiner::check() const {
  const std::size_t d = w2_.rows();
  const std::size_t h = w1_.rows();
  if (w1_.cols() != 3 * d || w2_.cols() != h || b1_.size() != h || b2_.size() != d) {
    throw DimensionError("EdgeCombiner: inconsistent weight shapes");
  }
  if (!w1_.all_finite() || !w2_.all_finite()) throw InvariantError("EdgeCombiner: non-finite weights");
}

namespace {

void check_inputs(const EdgeCombiner& c, const GlobalRelationEmbedding& rln,
                  std::span<const double> e_i, std::span<const double> e_j) {
  const std::size_t d = c.dim();
  if (rln.values.size() != d || e_i.size() != d || e_j.size() != d) {
    throw DimensionError("edge_feature: inputs must all have dim " + std::to_string(d));
  }
}

std::vector<double> concat(const GlobalRelationEmbedding& rln, std::span<const double> e_i,
                           std::span<const double> e_j) {
  std::vector<double> x;
  x.reserve(3 * e_i.size());
  x.insert(x.end(), rln.values.begin(), rln.values.end());
  x.insert(x.end(), e_i.begin(), e_i.end());
  x.insert(x.end(), e_j.begin(), e_j.end());
  return x;
}

std::vector<double> hidden_activation(const EdgeCombiner& c, const std::vector<double>& x) {
  std::vector<double> a(c.hidden());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::tanh(dot(c.w1().row(k), x) + c.b1()[k]);
  return a;
}

}  // namespace

std::vector<double> edge_feature(const EdgeCombiner& combiner, const GlobalRelationEmbedding& rln,
                                 std::span<const double> e_i, std::span<const double> e_j) {
  check_inputs(combiner, rln, e_i, e_j);
  const std::vector<double> a = hidden_activation(combiner, concat(rln, e_i, e_j));
  std::vector<double> y(combiner.dim());
  for (std::size_t r = 0; r < y.size(); ++r) y[r] = dot(combiner.w2().row(r), a) + combiner.b2()[r];
  return y;
}

EdgeFeatureBackward edge_feature_backward(const EdgeCombiner& combiner,
                                          const GlobalRelationEmbedding& rln,
                                          std::span<const double> e_i, std::span<const double> e_j,
                                          std::span<const double> d_out) {
  check_inputs(combiner, rln, e_i, e_j);
  const std::size_t d = combiner.dim();
  if (d_out.size() != d) throw DimensionError("edge_feature_backward: upstream gradient dim");
  const std::vector<double> a = hidden_activation(combiner, concat(rln, e_i, e_j));

  std::vector<double> d_pre(a.size(), 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    auto w = combiner.w2().row(r);
    for (std::size_t k = 0; k < a.size(); ++k) d_pre[k] += w[k] * d_out[r];
  }
  for (std::size_t k = 0; k < a.size(); ++k) d_pre[k] *= 1.0 - a[k] * a[k];

  std::vector<double> dx(3 * d, 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (d_pre[k] == 0.0) continue;
    auto w = combiner.w1().row(k);
    for (std::size_t c = 0; c < dx.size(); ++c) dx[c] += w[c] * d_pre[k];
  }
  EdgeFeatureBackward out;
  out.d_rln.assign(dx.begin(), dx.begin() + d);
  out.d_i.assign(dx.begin() + d, dx.begin() + 2 * d);
  out.d_j.assign(dx.begin() + 2 * d, dx.end());
  return out;
}

Matrix classify(const EmbeddingMatrix& features, const EmbeddingMatrix& class_embeddings,
                double temperature) {
  if (features.rows() > 0 && class_embeddings.rows() > 0 &&
      features.cols() != class_embeddings.cols()) {
    throw DimensionError("classify: feature dim " + std::to_string(features.cols()) +
                         " vs class dim " + std::to_string(class_embeddings.cols()));
  }
  std::vector<double> class_norms(class_embeddings.rows());
  for (std::size_t c = 0; c < class_embeddings.rows(); ++c) {
    class_norms[c] = l2_norm(class_embeddings.row(c));
    if (!(class_norms[c] > 0.0)) throw InvariantError("classify: zero-norm class embedding");
  }
  Matrix scores(features.rows(), class_embeddings.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const double fn = l2_norm(features.row(r));
    if (!(fn > 0.0)) throw InvariantError("classify: zero-norm feature row " + std::to_string(r));
    for (std::size_t c = 0; c < class_embeddings.rows(); ++c) {
      const double cosine = dot(features.row(r), class_embeddings.row(c)) / (fn * class_norms[c]);
      scores(r, c) = 1.0 / (1.0 + std::exp(-temperature * cosine));
    }
  }
  return scores;
}

BoundingBox token_box(std::size_t index, std::size_t count) {
  std::size_t side = 1;
  while (side * side < count) ++side;
  const double cell = 1.0 / static_cast<double>(side);
  const double row = static_cast<double>(index / side);
  const double col = static_cast<double>(index % side);
  return {(col + 0.5) * cell, (row + 0.5) * cell, cell, cell};
}

std::vector<TripletCandidate> predict_triplets(const EmbeddingMatrix& visual,
                                               const std::vector<int>& selected,
                                               const EmbeddingMatrix& object_tokens,
                                               const EmbeddingMatrix& relation_tokens,
                                               const Vocabulary& vocab,
                                               const EdgeCombiner& combiner,
                                               const GlobalRelationEmbedding& rln,
                                               std::size_t max_triplets) {
  if (object_tokens.rows() != static_cast<std::size_t>(vocab.num_objects()) ||
      relation_tokens.rows() != static_cast<std::size_t>(vocab.num_relations())) {
    throw DimensionError("predict_triplets: token tables do not match the vocabulary");
  }
  Matrix nodes(selected.size(), visual.cols());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    auto src = visual.row(static_cast<std::size_t>(selected[i]));
    std::copy(src.begin(), src.end(), nodes.row(i).begin());
  }
  const Matrix node_scores = classify(nodes, object_tokens);
  std::vector<int> node_cls(selected.size());
  std::vector<double> node_score(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    auto row = node_scores.row(i);
    const auto best = std::max_element(row.begin(), row.end());
    node_cls[i] = static_cast<int>(best - row.begin());
    node_score[i] = *best;
  }

  struct Scored {
    double score;
    std::size_t sub, obj;
    int rel;
  };
  std::vector<Scored> pairs;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    for (std::size_t j = 0; j < selected.size(); ++j) {
      if (i == j) continue;
      const auto e = edge_feature(combiner, rln, nodes.row(i), nodes.row(j));
      const Matrix rel = classify(Matrix(1, e.size(), e), relation_tokens);
      auto row = rel.row(0);
      const auto best = std::max_element(row.begin(), row.end());
      pairs.push_back({node_score[i] * (*best) * node_score[j], i, j,
                       static_cast<int>(best - row.begin())});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  if (pairs.size() > max_triplets) pairs.resize(max_triplets);

  std::vector<TripletCandidate> out;
  for (const Scored& p : pairs) {
    TripletCandidate t;
    t.subject = vocab.objects()[static_cast<std::size_t>(node_cls[p.sub])];
    t.relation = vocab.relations()[static_cast<std::size_t>(p.rel)];
    t.object = vocab.objects()[static_cast<std::size_t>(node_cls[p.obj])];
    t.subject_box = token_box(static_cast<std::size_t>(selected[p.sub]), visual.rows());
    t.object_box = token_box(static_cast<std::size_t>(selected[p.obj]), visual.rows());
    t.confidence = p.score;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace sgkit
