#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "mvf/tensor.hpp"

namespace mvf {

/// Central-difference gradient verification.
///
/// The objective is a scalar function of a flat coordinate vector; the
/// analytic gradient is produced by the caller's backward pass.  For large
/// inputs a random subsample of at least `min_coords` coordinates is
/// checked.  Relative error uses max(|analytic|, |numeric|, floor) as the
/// denominator.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_coord = 0;
};

inline GradCheckResult finite_diff_gradcheck(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> point, const std::vector<double>& analytic_grad,
    double epsilon = 1e-6, std::size_t min_coords = 200,
    std::uint64_t seed = 0, double denom_floor = 1e-12) {
  if (epsilon < 1e-8 || epsilon > 1e-4)
    throw DomainError("finite_diff_gradcheck: epsilon outside [1e-8, 1e-4]");
  const std::size_t dim = point.size();
  std::vector<std::size_t> coords(dim);
  for (std::size_t i = 0; i < dim; ++i) coords[i] = i;
  if (dim > min_coords) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(min_coords);
  }
  GradCheckResult r;
  for (std::size_t idx : coords) {
    const double orig = point[idx];
    point[idx] = orig + epsilon;
    const double fp = objective(point);
    point[idx] = orig - epsilon;
    const double fm = objective(point);
    point[idx] = orig;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double analytic = analytic_grad[idx];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), denom_floor});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > r.max_rel_err) {
      r.max_rel_err = rel;
      r.worst_coord = idx;
    }
    ++r.coords_checked;
  }
  return r;
}

}  // namespace mvf
