// SPDX-License-Identifier: Apache-2.0

#include "sgkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sgkit {

namespace {

struct Layout {
  std::size_t q, c, e, r, d;
  std::size_t boxes() const { return 0; }
  std::size_t obj() const { return q * 4; }
  std::size_t rel() const { return obj() + q * c; }
  std::size_t student() const { return rel() + e * r; }
  std::size_t size() const { return student() + q * d; }
};

}  // namespace

DescentProblem::DescentProblem(const DescentSpec& spec)
    : spec_(spec),
      combiner_(spec.seed ^ 0xc0b1ULL, static_cast<std::size_t>(spec.dim)),
      rln_(GlobalRelationEmbedding::random(spec.seed, static_cast<std::size_t>(spec.dim))) {
  if (spec.triplets * 2 > spec.queries) throw InvariantError("descent: too few queries for the GT");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> center(0.25, 0.75), size(0.1, 0.4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, spec.num_classes - 1), rel(0, spec.num_relations - 1);

  const std::size_t per_image = image_params();
  initial_.assign(per_image * static_cast<std::size_t>(spec.n_images), 0.0);
  for (int i = 0; i < spec.n_images; ++i) {
    Image img;
    img.offset = per_image * static_cast<std::size_t>(i);
    for (int t = 0; t < spec.triplets; ++t) {
      const int s = static_cast<int>(img.gt_nodes.size());
      img.gt_nodes.push_back({{center(rng), center(rng), size(rng), size(rng)}, cls(rng), 1.0});
      img.gt_nodes.push_back({{center(rng), center(rng), size(rng), size(rng)}, cls(rng), 1.0});
      img.gt_edges.push_back({s, s + 1, rel(rng), 1.0});
    }
    img.teacher_nodes = Matrix(static_cast<std::size_t>(spec.queries), static_cast<std::size_t>(spec.dim));
    for (double& v : img.teacher_nodes.data()) v = normal(rng) / std::sqrt(static_cast<double>(spec.dim));

    double* p = initial_.data() + img.offset;
    const Layout L{static_cast<std::size_t>(spec.queries), static_cast<std::size_t>(spec.num_classes),
                   img.gt_edges.size(), static_cast<std::size_t>(spec.num_relations),
                   static_cast<std::size_t>(spec.dim)};
    for (std::size_t q = 0; q < L.q; ++q) {
      p[L.boxes() + 4 * q + 0] = center(rng);
      p[L.boxes() + 4 * q + 1] = center(rng);
      p[L.boxes() + 4 * q + 2] = size(rng);
      p[L.boxes() + 4 * q + 3] = size(rng);
    }
    for (std::size_t k = 0; k < L.q * L.c + L.e * L.r; ++k) p[L.obj() + k] = 0.5 * normal(rng);
    for (std::size_t k = 0; k < L.q * L.d; ++k) {
      p[L.student() + k] = img.teacher_nodes.data()[k] +
                           spec.student_noise * normal(rng) / std::sqrt(static_cast<double>(spec.dim));
    }
    images_.push_back(std::move(img));
  }
}

std::size_t DescentProblem::image_params() const {
  return Layout{static_cast<std::size_t>(spec_.queries), static_cast<std::size_t>(spec_.num_classes),
                static_cast<std::size_t>(spec_.triplets), static_cast<std::size_t>(spec_.num_relations),
                static_cast<std::size_t>(spec_.dim)}
      .size();
}

void DescentProblem::project(std::span<double> params) const {
  for (const Image& img : images_) {
    for (int q = 0; q < spec_.queries; ++q) {
      double* b = params.data() + img.offset + 4 * static_cast<std::size_t>(q);
      b[0] = std::clamp(b[0], 0.0, 1.0);
      b[1] = std::clamp(b[1], 0.0, 1.0);
      b[2] = std::clamp(b[2], 0.01, 1.0);
      b[3] = std::clamp(b[3], 0.01, 1.0);
    }
  }
}

ObjectiveValue DescentProblem::evaluate(std::span<const double> params) const {
  if (params.size() != initial_.size()) throw DimensionError("descent: parameter count");
  ObjectiveValue out;
  out.grad.assign(params.size(), 0.0);
  const double inv_images = 1.0 / static_cast<double>(images_.size());
  const std::size_t d = static_cast<std::size_t>(spec_.dim);

  for (const Image& img : images_) {
    const Layout L{static_cast<std::size_t>(spec_.queries), static_cast<std::size_t>(spec_.num_classes),
                   img.gt_edges.size(), static_cast<std::size_t>(spec_.num_relations), d};
    const double* p = params.data() + img.offset;
    double* g = out.grad.data() + img.offset;

    std::vector<BoundingBox> boxes(L.q);
    Matrix probs(L.q, L.c);
    for (std::size_t q = 0; q < L.q; ++q) {
      boxes[q] = {p[4 * q], p[4 * q + 1], p[4 * q + 2], p[4 * q + 3]};
      for (std::size_t c = 0; c < L.c; ++c) probs(q, c) = sigmoid(p[L.obj() + q * L.c + c]);
    }
    const Matching m =
        hungarian(build_cost(boxes, probs, img.gt_nodes, weights_, static_cast<int>(L.c)));
    std::vector<int> query_of_gt(img.gt_nodes.size(), -1);
    for (const auto& [q, gi] : m.pairs) query_of_gt[static_cast<std::size_t>(gi)] = q;

    // Box regression and entity classification over matched queries.
    const double inv_matched = 1.0 / static_cast<double>(m.pairs.size());
    LossParts parts;
    for (const auto& [q, gi] : m.pairs) {
      const std::size_t qi = static_cast<std::size_t>(q);
      const BoxRegression br = box_regression_loss(boxes[qi], img.gt_nodes[static_cast<std::size_t>(gi)].box);
      parts.reg += br.l1 * inv_matched;
      parts.giou += br.giou * inv_matched;
      for (int k = 0; k < 4; ++k) {
        g[4 * qi + static_cast<std::size_t>(k)] +=
            inv_images * inv_matched * (br.grad_l1[static_cast<std::size_t>(k)] + br.grad_giou[static_cast<std::size_t>(k)]);
      }
      const LossWithGrad fl = focal_loss(std::span<const double>(p + L.obj() + qi * L.c, L.c),
                                         img.gt_nodes[static_cast<std::size_t>(gi)].cls, loss_cfg_);
      parts.obj += fl.loss * inv_matched;
      for (std::size_t c = 0; c < L.c; ++c) g[L.obj() + qi * L.c + c] += inv_images * inv_matched * fl.grad[c];
    }

    // Relation classification per GT edge.
    const double inv_edges = 1.0 / static_cast<double>(L.e);
    for (std::size_t e = 0; e < L.e; ++e) {
      std::vector<bool> target(L.r, false);
      target[static_cast<std::size_t>(img.gt_edges[e].rel)] = true;
      const LossWithGrad bl = bce_relation_loss(std::span<const double>(p + L.rel() + e * L.r, L.r), target);
      parts.rel += bl.loss * inv_edges;
      for (std::size_t r = 0; r < L.r; ++r) g[L.rel() + e * L.r + r] += inv_images * inv_edges * bl.grad[r];
    }

    // Distillation over ordered query pairs; matched GT edges are positives.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    EdgeFeatureSet student, teacher;
    std::vector<std::vector<double>> s_rows, t_rows;
    for (std::size_t a = 0; a < L.q; ++a) {
      for (std::size_t b = 0; b < L.q; ++b) {
        if (a == b) continue;
        bool positive = false;
        for (const GraphEdge& ge : img.gt_edges) {
          positive |= query_of_gt[static_cast<std::size_t>(ge.sub)] == static_cast<int>(a) &&
                      query_of_gt[static_cast<std::size_t>(ge.obj)] == static_cast<int>(b);
        }
        pairs.emplace_back(a, b);
        student.negative.push_back(!positive);
        s_rows.push_back(edge_feature(combiner_, rln_, std::span<const double>(p + L.student() + a * d, d),
                                      std::span<const double>(p + L.student() + b * d, d)));
        t_rows.push_back(edge_feature(combiner_, rln_, img.teacher_nodes.row(a), img.teacher_nodes.row(b)));
      }
    }
    teacher.negative = student.negative;
    student.features = Matrix::from_rows(s_rows);
    teacher.features = Matrix::from_rows(t_rows);
    const DistillLoss vrd = vrd_loss(student, teacher);
    const DistillLoss rrd = rrd_loss(student, teacher);
    parts.vrd = vrd.loss;
    parts.rrd = rrd.loss;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (!student.negative[k]) continue;
      std::vector<double> up(d);
      for (std::size_t c = 0; c < d; ++c) {
        up[c] = inv_images * (distill_.beta1 * vrd.grad(k, c) + distill_.beta2 * rrd.grad(k, c));
      }
      const auto [a, b] = pairs[k];
      const EdgeFeatureBackward bw =
          edge_feature_backward(combiner_, rln_, std::span<const double>(p + L.student() + a * d, d),
                                std::span<const double>(p + L.student() + b * d, d), up);
      for (std::size_t c = 0; c < d; ++c) {
        g[L.student() + a * d + c] += bw.d_i[c];
        g[L.student() + b * d + c] += bw.d_j[c];
      }
    }

    out.parts.reg += parts.reg * inv_images;
    out.parts.giou += parts.giou * inv_images;
    out.parts.obj += parts.obj * inv_images;
    out.parts.rel += parts.rel * inv_images;
    out.parts.vrd += parts.vrd * inv_images;
    out.parts.rrd += parts.rrd * inv_images;
  }
  out.total = total_loss(out.parts, distill_);
  return out;
}

DescentResult gradient_descent(const DescentProblem& problem, int steps, double learning_rate) {
  DescentResult r;
  r.params = problem.initial_params();
  for (int s = 0; s < steps; ++s) {
    const ObjectiveValue v = problem.evaluate(r.params);
    r.losses.push_back(v.total);
    for (std::size_t i = 0; i < r.params.size(); ++i) r.params[i] -= learning_rate * v.grad[i];
    problem.project(r.params);
  }
  r.losses.push_back(problem.evaluate(r.params).total);
  return r;
}

}  // namespace sgkit
