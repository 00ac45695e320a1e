// SPDX-License-Identifier: Apache-2.0
//
// Randomized finite-difference checks over every differentiable operation.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sgkit/gradcheck.hpp"

namespace sgkit {

struct GradSuiteConfig {
  std::uint64_t seed = 1;
  int instances = 100;
  double step = 1e-6;
  double threshold = 1e-4;
  /// Instances for the full combined objective, which is far larger.
  int combined_instances = 3;
  /// Name of an op whose analytic gradient is deliberately perturbed
  /// (negative control). Empty for none.
  std::string corrupt;
};

struct OpCheck {
  std::string op;
  int instances = 0;
  int skipped = 0;  // resampled near a non-smooth point
  double max_rel_error = 0.0;
  bool pass = false;
};

/// A random point, the analytic gradient there, and the scalar function it
/// should be the gradient of. `skip` marks points within 1e-4 of a
/// non-smooth set (L1 and GIoU kinks), which callers resample.
struct GradInstance {
  std::vector<double> x;
  std::vector<double> analytic;
  ScalarFn f;
  bool skip = false;
};

GradInstance sample_grad_instance(const std::string& op, std::mt19937_64& rng);

/// focal, bce, l1, giou, vrd, rrd, edge_feature, combined.
const std::vector<std::string>& grad_suite_ops();

std::vector<OpCheck> run_grad_suite(const GradSuiteConfig& cfg);

}  // namespace sgkit
