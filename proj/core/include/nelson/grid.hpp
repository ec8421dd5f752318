#pragma once

#include <cstddef>
#include <vector>

namespace nelson {

/// Uniform periodic grid with points x_i = x_min + i*dx, i in [0, n).
///
/// Cell i is the interval [x_i - dx/2, x_i + dx/2); histograms, cell
/// averages and inverse-CDF sampling all use this convention.
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double length() const noexcept { return x_max_ - x_min_; }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
  std::vector<double> points() const;

  /// Index of the cell containing x, or -1 when x lies outside all cells.
  std::ptrdiff_t cell_of(double x) const noexcept;

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

/// Throws GridMismatch unless the two grids are identical.
void require_same_grid(const Grid1D& a, const Grid1D& b, const char* context);

}  // namespace nelson
