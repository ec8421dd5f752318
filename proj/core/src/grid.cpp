#include "nelson/grid.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "nelson/error.hpp"

namespace nelson {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n)
    : x_min_(x_min), x_max_(x_max), n_(n), dx_((x_max - x_min) / static_cast<double>(n)) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    throw Error(ErrorCode::invalid_argument, "grid requires finite x_max > x_min");
  }
  if (n < 64 || !std::has_single_bit(n)) {
    std::ostringstream os;
    os << "grid size must be a power of two >= 64, got " << n;
    throw Error(ErrorCode::invalid_argument, os.str());
  }
}

std::vector<double> Grid1D::points() const {
  std::vector<double> xs(n_);
  for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
  return xs;
}

std::ptrdiff_t Grid1D::cell_of(double x) const noexcept {
  const double s = (x - x_min_) / dx_ + 0.5;
  if (!(s >= 0.0) || s >= static_cast<double>(n_)) return -1;
  return static_cast<std::ptrdiff_t>(s);
}

void require_same_grid(const Grid1D& a, const Grid1D& b, const char* context) {
  if (!(a == b)) throw Error(ErrorCode::grid_mismatch, context);
}

}  // namespace nelson
