// SPDX-License-Identifier: Apache-2.0

#include "sgkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sgkit/core.hpp"

namespace sgkit {

std::vector<double> numerical_gradient(const ScalarFn& f, std::span<const double> x, double step) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double down = f(probe);
    probe[i] = orig;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor) {
  if (analytic.size() != numeric.size()) {
    throw DimensionError("max_relative_error: length mismatch");
  }
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / scale;
}

GradCheckResult check_gradient(const ScalarFn& f, std::span<const double> x,
                               std::span<const double> analytic, double step) {
  GradCheckResult r;
  r.numeric = numerical_gradient(f, x, step);
  r.max_rel_error = max_relative_error(analytic, r.numeric);
  return r;
}

double directional_gradient_error(const ScalarFn& f, std::span<const double> x,
                                  std::span<const double> analytic, int directions,
                                  std::uint64_t seed, double step, double floor) {
  if (x.size() != analytic.size()) throw DimensionError("directional_gradient_error: size mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::max(l2_norm(analytic), floor);
  std::vector<double> v(x.size()), probe(x.size());
  double worst = 0.0;
  for (int d = 0; d < directions; ++d) {
    for (double& c : v) c = normal(rng);
    const double n = l2_norm(v);
    if (n == 0.0) continue;
    for (double& c : v) c /= n;
    for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + step * v[i];
    const double up = f(probe);
    for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] - step * v[i];
    const double down = f(probe);
    worst = std::max(worst, std::abs(dot(analytic, v) - (up - down) / (2.0 * step)) / scale);
  }
  return worst;
}

}  // namespace sgkit
