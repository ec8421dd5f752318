#pragma once

// Small numerical helpers shared by the simulation and verification code.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nelson/grid.hpp"

namespace nelson {

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Each index runs exactly once; exceptions are rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

/// Catmull-Rom cubic interpolation of grid samples. Evaluation outside
/// [x_0, x_{n-1}] throws InterpolationOutOfRange.
class CubicInterpolator {
 public:
  CubicInterpolator(const Grid1D& grid, std::span<const double> values);

  double operator()(double x) const;
  bool contains(double x) const noexcept;

 private:
  Grid1D grid_;
  std::vector<double> v_;
};

/// Four-point Catmull-Rom weights for one evaluation point; reusable
/// across several fields sampled on the same grid.
struct CubicWeights {
  std::size_t i0 = 0;
  double w[4] = {0.0, 0.0, 0.0, 0.0};

  double apply(std::span<const double> v) const noexcept {
    return w[0] * v[i0] + w[1] * v[i0 + 1] + w[2] * v[i0 + 2] + w[3] * v[i0 + 3];
  }

  /// Values defined modulo `period`: the stencil is unwrapped around its second node first.
  double apply_periodic(std::span<const double> v, double period) const noexcept {
    const double ref = v[i0 + 1];
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double d = v[i0 + j] - ref;
      acc += w[j] * (ref + d - period * std::nearbyint(d / period));
    }
    return acc;
  }
};

/// Throws InterpolationOutOfRange outside [x_0, x_{n-1}].
CubicWeights cubic_weights(const Grid1D& grid, double x);

/// Same scheme as CubicInterpolator without the copy.
double cubic_at(const Grid1D& grid, std::span<const double> values, double x);

/// Grid samples at the times t0 + j*dt, j in [0, rows).
struct TimeTable {
  Grid1D grid;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<std::vector<double>> rows;

  double t_end() const noexcept { return t0 + dt * static_cast<double>(rows.size() - 1); }
  /// Row whose time matches t to 1e-6 of a step; OutOfRange otherwise.
  std::size_t row_index(double t) const;
};

}  // namespace nelson
