// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fd_oracle.hpp"
#include "sgkit/distillation.hpp"

using namespace sgkit;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

std::vector<double> flat(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(Vrd, IdenticalSetsAreZero) {
  std::mt19937_64 rng(1);
  const EdgeFeatureSet t{random_matrix(rng, 5, 4), {true, true, false, true, false}};
  const DistillLoss d = vrd_loss(t, t);
  EXPECT_EQ(d.loss, 0.0);
  for (double g : d.grad.data()) EXPECT_EQ(g, 0.0);
}

TEST(Vrd, SingleCoordinateOffset) {
  const EdgeFeatureSet t{Matrix::from_rows({{0.1, 0.2, 0.3}, {1.0, 1.0, 1.0}}), {true, false}};
  EdgeFeatureSet s = t;
  s.features(0, 1) += 0.5;
  s.features(1, 0) += 7.0;  // positive pair, ignored
  const DistillLoss d = vrd_loss(s, t);
  EXPECT_NEAR(d.loss, 0.5, 1e-15);
  EXPECT_EQ(d.grad(0, 1), 1.0);
  EXPECT_EQ(d.grad(0, 0), 0.0);
  EXPECT_EQ(d.grad(1, 0), 0.0);
}

TEST(Vrd, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const EdgeFeatureSet teacher{random_matrix(rng, 6, 5), {true, false, true, true, false, true}};
    const EdgeFeatureSet student{random_matrix(rng, 6, 5), teacher.negative};
    const auto num = fd::gradient(
        [&](const std::vector<double>& p) { return vrd_loss({Matrix(6, 5, p), teacher.negative}, teacher).loss; },
        flat(student.features));
    EXPECT_LT(fd::rel_error(flat(vrd_loss(student, teacher).grad), num), 1e-5);
  }
}

TEST(Distill, InputErrors) {
  const EdgeFeatureSet t{Matrix::from_rows({{1, 0}, {0, 1}}), {false, false}};
  EXPECT_THROW(vrd_loss(t, t), InvariantError);
  EXPECT_THROW(rrd_loss(t, t), InvariantError);
  const EdgeFeatureSet a{Matrix::from_rows({{1, 0}, {0, 1}}), {true, true}};
  const EdgeFeatureSet b{Matrix::from_rows({{1, 0, 0}, {0, 1, 0}}), {true, true}};
  EXPECT_THROW(vrd_loss(a, b), DimensionError);
  const EdgeFeatureSet zero{Matrix::from_rows({{0, 0}, {0, 1}}), {true, true}};
  EXPECT_THROW(rrd_loss(zero, a), InvariantError);
}

TEST(StructureMatrix, KnownCases) {
  const Matrix eye = structure_matrix(Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(eye(i, j), i == j ? 1.0 : 0.0, 1e-15);
  const Matrix scaled = structure_matrix(Matrix::from_rows({{0.3, -0.4}, {0.6, -0.8}}));
  EXPECT_NEAR(scaled(0, 1), 1.0, 1e-15);
  std::mt19937_64 rng(3);
  const Matrix f = random_matrix(rng, 4, 8);
  const Matrix m = structure_matrix(f);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(m(i, j), cosine(f.row(i), f.row(j)), 1e-14);
}

TEST(Rrd, ZeroForEqualOrScaledSets) {
  std::mt19937_64 rng(4);
  const EdgeFeatureSet t{random_matrix(rng, 5, 6), {true, true, true, false, true}};
  EXPECT_EQ(rrd_loss(t, t).loss, 0.0);
  EdgeFeatureSet s = t;
  for (double& v : s.features.data()) v *= 3.0;
  EXPECT_LT(rrd_loss(s, t).loss, 1e-28);
  EXPECT_GT(vrd_loss(s, t).loss, 0.1);
}

TEST(Rrd, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const EdgeFeatureSet teacher{random_matrix(rng, 6, 4), {true, true, false, true, true, false}};
    const EdgeFeatureSet student{random_matrix(rng, 6, 4), teacher.negative};
    const auto num = fd::gradient(
        [&](const std::vector<double>& p) { return rrd_loss({Matrix(6, 4, p), teacher.negative}, teacher).loss; },
        flat(student.features));
    EXPECT_LT(fd::rel_error(flat(rrd_loss(student, teacher).grad), num), 1e-4);
  }
}

TEST(Rrd, MatchesFrobeniusRecomputation) {
  std::mt19937_64 rng(6);
  const EdgeFeatureSet teacher{random_matrix(rng, 4, 3), {true, true, true, true}};
  const EdgeFeatureSet student{random_matrix(rng, 4, 3), teacher.negative};
  double want = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = cosine(student.features.row(i), student.features.row(j)) -
                       cosine(teacher.features.row(i), teacher.features.row(j));
      want += d * d;
    }
  }
  EXPECT_NEAR(rrd_loss(student, teacher).loss, want / 16.0, 1e-14);
}

TEST(TotalLoss, Weighting) {
  const LossParts p{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_NEAR(total_loss(p, {0.0, 0.0}), 1.0, 1e-15);
  EXPECT_EQ(total_loss({}, {}), 0.0);
  EXPECT_NEAR(total_loss(p, {2.0, 3.0}), 1.0 + 1.0 + 1.8, 1e-15);
  EXPECT_THROW((DistillConfig{-1.0, 1.0}.validate()), InvariantError);
}
