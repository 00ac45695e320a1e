// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "sgkit/query_selection.hpp"

using namespace sgkit;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

std::vector<int> sorted_top(const std::vector<double>& s, std::vector<int> idx, std::size_t k) {
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
  idx.resize(k);
  return idx;
}

}  // namespace

TEST(RelevanceScores, HandComputedGeometricMeans) {
  const Matrix v = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  const Matrix to = Matrix::from_rows({{0.9, 0.1}, {0.2, 0.4}});
  const Matrix tr = Matrix::from_rows({{0.5, 0.0}, {0.1, 0.8}});
  const std::vector<double> s = relevance_scores(v, to, tr, 0.5);
  EXPECT_NEAR(s[0], std::sqrt(0.9 * 0.5), 1e-12);
  EXPECT_NEAR(s[1], std::sqrt(0.4 * 0.8), 1e-12);
  EXPECT_NEAR(s[2], std::sqrt(1.0 * 0.9), 1e-12);
}

TEST(RelevanceScores, GammaBoundaries) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix v(10, 6), to(3, 6), tr(4, 6);
  for (Matrix* m : {&v, &to, &tr})
    for (double& x : m->data()) x = u(rng);
  const std::vector<double> obj = max_similarity(v, to), rel = max_similarity(v, tr);
  EXPECT_EQ(relevance_scores(v, to, tr, 1.0), obj);
  EXPECT_EQ(relevance_scores(v, to, tr, 0.0), rel);
  EXPECT_THROW(relevance_scores(v, to, tr, 1.5), InvariantError);
  EXPECT_THROW(relevance_scores(v, Matrix(2, 5), tr, 0.5), DimensionError);
}

TEST(RelevanceScores, NonPositiveSimilarityIsFloored) {
  const Matrix v = Matrix::from_rows({{1, 0}});
  const Matrix to = Matrix::from_rows({{-1, 0}});
  const Matrix tr = Matrix::from_rows({{1, 0}});
  EXPECT_NEAR(relevance_scores(v, to, tr, 0.5)[0], std::sqrt(kRelevanceFloor), 1e-15);
}

TEST(TopK, OrderingAndTies) {
  EXPECT_EQ(top_k({5, 4, 3, 2, 1}, 3), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(top_k({1, 1, 1, 1}, 2), (std::vector<int>{0, 1}));
  EXPECT_THROW(top_k({1, 2}, 3), InvariantError);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(30);
    for (double& x : s) x = u(rng);
    std::vector<int> idx(30);
    std::iota(idx.begin(), idx.end(), 0);
    const std::vector<int> got = top_k(s, 7);
    EXPECT_EQ(std::set<int>(got.begin(), got.end()), [&] {
      const auto w = sorted_top(s, idx, 7);
      return std::set<int>(w.begin(), w.end());
    }());
  }
}

TEST(DecomposeTriplets, Pairs) {
  TripletCandidate t{"man", "riding", "horse", {0.5, 0.5, 0.1, 0.1}, {0.5, 0.5, 0.1, 0.1}, 1.0};
  EXPECT_EQ(decompose_triplets({t}).pairs, (std::vector<std::string>{"man riding", "riding horse"}));
  EXPECT_TRUE(decompose_triplets({}).pairs.empty());
  TripletCandidate u = t;
  u.object = "bike";
  const auto p = decompose_triplets({t, u}).pairs;
  EXPECT_EQ(std::set<std::string>(p.begin(), p.end()),
            (std::set<std::string>{"man riding", "riding horse", "riding bike"}));
  EXPECT_EQ(p.size(), 3u);
}

TEST(InteractionSelect, FallbackAndFullInteraction) {
  std::mt19937_64 rng(3);
  const Matrix v = random_matrix(rng, 12, 5), to = random_matrix(rng, 3, 5), tin = random_matrix(rng, 2, 5);
  const SelectionResult fallback = interaction_select(v, Matrix(0, 5), to, {5, 2, 0.5});
  EXPECT_EQ(fallback.all, top_k(max_similarity(v, to), 5));
  const SelectionResult full = interaction_select(v, tin, to, {5, 5, 0.5});
  EXPECT_TRUE(full.missing.empty());
  EXPECT_EQ(full.all, full.interaction);
  EXPECT_EQ(full.all, top_k(max_similarity(v, tin), 5));
  EXPECT_THROW(interaction_select(v, tin, to, {13, 2, 0.5}), InvariantError);
  EXPECT_THROW(interaction_select(v, tin, to, {5, 0, 0.5}), InvariantError);
  EXPECT_THROW(interaction_select(v, tin, to, {5, 6, 0.5}), InvariantError);
}

TEST(InteractionSelect, InteractionBestObjectWorstToken) {
  // Token 5 aligns with the interaction prompt only and scores worst on
  // objects; the other tokens lean towards the object direction.
  Matrix v(8, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    v(i, 0) = 1.0 - 0.05 * static_cast<double>(i);
    v(i, 1) = 0.1 * static_cast<double>(i % 3);
  }
  v(5, 0) = -1.0;
  v(5, 1) = 1.0;
  const Matrix to = Matrix::from_rows({{1.0, 0.0}});
  const Matrix tin = Matrix::from_rows({{0.0, 1.0}});
  const SelectionResult r = interaction_select(v, tin, to, {4, 2, 0.5});
  EXPECT_EQ(r.interaction.front(), 5);
  EXPECT_EQ(std::count(r.all.begin(), r.all.end(), 5), 1);
  EXPECT_EQ(std::count(r.missing.begin(), r.missing.end(), 5), 0);

  // Exhaustive recomputation.
  const std::vector<double> s_in = {v(0, 1), v(1, 1), v(2, 1), v(3, 1), v(4, 1), v(5, 1), v(6, 1), v(7, 1)};
  std::vector<int> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  const std::vector<int> want_in = sorted_top(s_in, idx, 2);
  std::vector<int> rest;
  for (int i : idx)
    if (std::find(want_in.begin(), want_in.end(), i) == want_in.end()) rest.push_back(i);
  std::vector<double> s_o(8);
  for (std::size_t i = 0; i < 8; ++i) s_o[i] = v(i, 0);
  EXPECT_EQ(r.interaction, want_in);
  EXPECT_EQ(r.missing, sorted_top(s_o, rest, 2));
}

TEST(SelectionConfig, Defaults) {
  const SelectionConfig c = SelectionConfig::with_defaults(9);
  EXPECT_EQ(c.l, 4);
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_EQ(SelectionConfig::with_defaults(1).l, 1);
}
