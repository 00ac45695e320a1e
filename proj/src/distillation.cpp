// SPDX-License-Identifier: Apache-2.0

#include "sgkit/distillation.hpp"

#include <cmath>
#include <string>

namespace sgkit {

std::size_t EdgeFeatureSet::num_negatives() const {
  std::size_t n = 0;
  for (bool b : negative) n += b ? 1 : 0;
  return n;
}

void DistillConfig::validate() const {
  if (!(beta1 >= 0.0) || !(beta2 >= 0.0)) throw InvariantError("distill: betas must be >= 0");
}

namespace {

std::vector<std::size_t> aligned_negatives(const EdgeFeatureSet& s, const EdgeFeatureSet& t,
                                           const char* op) {
  if (s.features.rows() != t.features.rows() || s.features.cols() != t.features.cols()) {
    throw DimensionError(std::string(op) + ": student " + std::to_string(s.features.rows()) + "x" +
                         std::to_string(s.features.cols()) + " vs teacher " +
                         std::to_string(t.features.rows()) + "x" +
                         std::to_string(t.features.cols()));
  }
  if (s.negative.size() != s.features.rows() || s.negative != t.negative) {
    throw DimensionError(std::string(op) + ": negative masks do not align with the rows");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < s.negative.size(); ++i)
    if (s.negative[i]) rows.push_back(i);
  if (rows.empty()) throw InvariantError(std::string(op) + ": empty negative set");
  return rows;
}

Matrix gather(const EmbeddingMatrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// Row-normalized copy plus the row norms.
Matrix normalize_rows(const EmbeddingMatrix& m, std::vector<double>& norms) {
  Matrix u(m.rows(), m.cols());
  norms.assign(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = l2_norm(m.row(r));
    if (!(n > 0.0)) throw InvariantError("structure_matrix: row " + std::to_string(r) + " has zero norm");
    norms[r] = n;
    for (std::size_t c = 0; c < m.cols(); ++c) u(r, c) = m(r, c) / n;
  }
  return u;
}

// Cosine matrix of unit rows; the diagonal is exactly 1.
Matrix gram(const Matrix& u) {
  Matrix g(u.rows(), u.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    g(i, i) = 1.0;
    for (std::size_t j = i + 1; j < u.rows(); ++j) {
      const double v = dot(u.row(i), u.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

}  // namespace

DistillLoss vrd_loss(const EdgeFeatureSet& student, const EdgeFeatureSet& teacher) {
  const auto rows = aligned_negatives(student, teacher, "vrd_loss");
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  DistillLoss out{0.0, Matrix(student.features.rows(), student.features.cols())};
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < student.features.cols(); ++c) {
      const double d = student.features(r, c) - teacher.features(r, c);
      out.loss += std::abs(d);
      out.grad(r, c) = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
  }
  out.loss *= inv_n;
  return out;
}

Matrix structure_matrix(const EmbeddingMatrix& features) {
  std::vector<double> norms;
  return gram(normalize_rows(features, norms));
}

DistillLoss rrd_loss(const EdgeFeatureSet& student, const EdgeFeatureSet& teacher) {
  const auto rows = aligned_negatives(student, teacher, "rrd_loss");
  const std::size_t n = rows.size();
  std::vector<double> s_norms, t_norms;
  const Matrix us = normalize_rows(gather(student.features, rows), s_norms);
  const Matrix ut = normalize_rows(gather(teacher.features, rows), t_norms);
  const Matrix ms = gram(us);
  const Matrix mt = gram(ut);

  const double inv_n2 = 1.0 / static_cast<double>(n * n);
  Matrix diff(n, n);
  DistillLoss out{0.0, Matrix(student.features.rows(), student.features.cols())};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      diff(i, j) = ms(i, j) - mt(i, j);
      out.loss += diff(i, j) * diff(i, j);
    }
  }
  out.loss *= inv_n2;

  // dL/dU = (4/n^2) D U, since D is symmetric; then through u = e / |e|:
  // dL/de = (dL/du - (dL/du . u) u) / |e|.
  const std::size_t d = student.features.cols();
  std::vector<double> gu(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(gu.begin(), gu.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = 4.0 * inv_n2 * diff(i, j);
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) gu[c] += w * us(j, c);
    }
    const double radial = dot(gu, us.row(i));
    auto g = out.grad.row(rows[i]);
    for (std::size_t c = 0; c < d; ++c) g[c] = (gu[c] - radial * us(i, c)) / s_norms[i];
  }
  return out;
}

double total_loss(const LossParts& p, const DistillConfig& cfg) {
  cfg.validate();
  return p.reg + p.giou + p.obj + p.rel + cfg.beta1 * p.vrd + cfg.beta2 * p.rrd;
}

}  // namespace sgkit
