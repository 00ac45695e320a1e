// SPDX-License-Identifier: Apache-2.0

#include "sgkit/grad_suite.hpp"

#include <algorithm>
#include <memory>

#include "sgkit/distillation.hpp"
#include "sgkit/gradcheck.hpp"
#include "sgkit/losses.hpp"
#include "sgkit/scene_model.hpp"
#include "sgkit/training.hpp"

namespace sgkit {

namespace {

using Rng = std::mt19937_64;

int irand(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double urand(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

BoundingBox random_box(Rng& rng) {
  return {urand(rng, 0.2, 0.8), urand(rng, 0.2, 0.8), urand(rng, 0.05, 0.5), urand(rng, 0.05, 0.5)};
}

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

std::vector<bool> random_mask(Rng& rng, std::size_t n, std::size_t min_true) {
  std::vector<bool> mask(n);
  for (;;) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = urand(rng, 0.0, 1.0) < 0.6;
      count += mask[i] ? 1 : 0;
    }
    if (count >= min_true) return mask;
  }
}

void corrupt(std::vector<double>& g) {
  if (!g.empty()) g[0] = g[0] * 1.5 + 1e-2;
}

}  // namespace

GradInstance sample_grad_instance(const std::string& op, Rng& rng) {
  GradInstance in;
  if (op == "focal") {
    const int classes = irand(rng, 2, 10);
    LossConfig cfg{urand(rng, 0.1, 0.9), urand(rng, 0.0, 3.0),
                   irand(rng, 0, 1) ? Reduction::kMean : Reduction::kSum};
    const int target = irand(rng, 0, classes - 1);
    in.x = random_matrix(rng, 1, static_cast<std::size_t>(classes)).to_rows()[0];
    for (double& v : in.x) v *= 2.0;
    in.analytic = focal_loss(in.x, target, cfg).grad;
    in.f = [=](std::span<const double> x) { return focal_loss(x, target, cfg).loss; };
  } else if (op == "bce") {
    const int classes = irand(rng, 1, 10);
    std::vector<bool> targets(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = irand(rng, 0, 1) == 1;
    in.x = random_matrix(rng, 1, static_cast<std::size_t>(classes)).to_rows()[0];
    for (double& v : in.x) v *= 2.0;
    in.analytic = bce_relation_loss(in.x, targets).grad;
    in.f = [=](std::span<const double> x) { return bce_relation_loss(x, targets).loss; };
  } else if (op == "l1" || op == "giou") {
    const BoundingBox pred = random_box(rng), gt = random_box(rng);
    const bool l1 = op == "l1";
    in.skip = l1 ? (std::abs(pred.cx - gt.cx) < 1e-4 || std::abs(pred.cy - gt.cy) < 1e-4 ||
                    std::abs(pred.w - gt.w) < 1e-4 || std::abs(pred.h - gt.h) < 1e-4)
                 : near_giou_kink(pred, gt, 1e-4);
    in.x = {pred.cx, pred.cy, pred.w, pred.h};
    const BoxRegression br = box_regression_loss(pred, gt);
    in.analytic.assign(l1 ? br.grad_l1.begin() : br.grad_giou.begin(),
                       l1 ? br.grad_l1.end() : br.grad_giou.end());
    in.f = [=](std::span<const double> x) {
      const BoxRegression b = box_regression_loss({x[0], x[1], x[2], x[3]}, gt);
      return l1 ? b.l1 : b.giou;
    };
  } else if (op == "vrd" || op == "rrd") {
    const auto rows = static_cast<std::size_t>(irand(rng, 2, 8));
    const auto dim = static_cast<std::size_t>(irand(rng, 2, 8));
    const bool vrd = op == "vrd";
    EdgeFeatureSet teacher{random_matrix(rng, rows, dim), random_mask(rng, rows, vrd ? 1 : 2)};
    EdgeFeatureSet student{random_matrix(rng, rows, dim), teacher.negative};
    in.x.assign(student.features.data().begin(), student.features.data().end());
    const DistillLoss dl = vrd ? vrd_loss(student, teacher) : rrd_loss(student, teacher);
    in.analytic.assign(dl.grad.data().begin(), dl.grad.data().end());
    in.f = [=](std::span<const double> x) {
      EdgeFeatureSet s{Matrix(rows, dim, std::vector<double>(x.begin(), x.end())), teacher.negative};
      return vrd ? vrd_loss(s, teacher).loss : rrd_loss(s, teacher).loss;
    };
  } else if (op == "edge_feature") {
    const auto dim = static_cast<std::size_t>(irand(rng, 2, 6));
    const EdgeCombiner comb(rng(), dim);
    const Matrix up = random_matrix(rng, 1, dim);
    const std::vector<double> w(up.data().begin(), up.data().end());
    in.x = random_matrix(rng, 1, 3 * dim).to_rows()[0];
    auto split = [dim](std::span<const double> x) {
      return std::make_tuple(GlobalRelationEmbedding{std::vector<double>(x.begin(), x.begin() + dim)},
                             x.subspan(dim, dim), x.subspan(2 * dim, dim));
    };
    {
      auto [rln, ei, ej] = split(in.x);
      const EdgeFeatureBackward bw = edge_feature_backward(comb, rln, ei, ej, w);
      in.analytic = bw.d_rln;
      in.analytic.insert(in.analytic.end(), bw.d_i.begin(), bw.d_i.end());
      in.analytic.insert(in.analytic.end(), bw.d_j.begin(), bw.d_j.end());
    }
    in.f = [=](std::span<const double> x) {
      auto [rln, ei, ej] = split(x);
      return dot(edge_feature(comb, rln, ei, ej), w);
    };
  } else if (op == "combined") {
    DescentSpec spec;
    spec.seed = rng();
    auto problem = std::make_shared<DescentProblem>(spec);
    in.x = problem->initial_params();
    in.analytic = problem->evaluate(in.x).grad;
    in.f = [problem](std::span<const double> x) { return problem->evaluate(x).total; };
  } else {
    throw Error("grad suite: unknown op '" + op + "'");
  }
  return in;
}

const std::vector<std::string>& grad_suite_ops() {
  static const std::vector<std::string> ops = {"focal", "bce", "l1", "giou", "vrd", "rrd",
                                               "edge_feature", "combined"};
  return ops;
}

std::vector<OpCheck> run_grad_suite(const GradSuiteConfig& cfg) {
  std::vector<OpCheck> out;
  for (std::size_t o = 0; o < grad_suite_ops().size(); ++o) {
    const std::string& op = grad_suite_ops()[o];
    Rng rng(cfg.seed * 1000003ULL + o);
    OpCheck check;
    check.op = op;
    const int wanted = op == "combined" ? cfg.combined_instances : cfg.instances;
    while (check.instances < wanted) {
      GradInstance in = sample_grad_instance(op, rng);
      if (in.skip) {
        ++check.skipped;
        continue;
      }
      if (op == cfg.corrupt) corrupt(in.analytic);
      const GradCheckResult r = check_gradient(in.f, in.x, in.analytic, cfg.step);
      check.max_rel_error = std::max(check.max_rel_error, r.max_rel_error);
      ++check.instances;
    }
    check.pass = check.max_rel_error <= cfg.threshold;
    out.push_back(check);
  }
  return out;
}

}  // namespace sgkit
