// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences for checking analytic gradients.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sgkit {

using ScalarFn = std::function<double(std::span<const double>)>;

/// (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
std::vector<double> numerical_gradient(const ScalarFn& f, std::span<const double> x,
                                       double step = 1e-6);

/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, floor). Scaling by the
/// gradient's largest entry keeps near-zero components from dominating.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = 1e-12);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<double> numeric;
};

GradCheckResult check_gradient(const ScalarFn& f, std::span<const double> x,
                               std::span<const double> analytic, double step = 1e-6);

/// Checks `analytic` along `directions` random unit directions drawn from
/// `seed`: max over directions of |g.v - (f(x+hv) - f(x-hv))/2h| scaled by
/// max(||g||, floor). Costs two evaluations per direction.
double directional_gradient_error(const ScalarFn& f, std::span<const double> x,
                                  std::span<const double> analytic, int directions,
                                  std::uint64_t seed, double step = 1e-6, double floor = 1e-12);

}  // namespace sgkit
