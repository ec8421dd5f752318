#pragma once

// Log-domain snapshots l = log psi = R + iS/hbar of a wavefunction on a
// grid, with first and second space derivatives and the time derivative.
// Working with l instead of psi keeps everything finite where |psi|
// underflows.

#include <cstddef>
#include <functional>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/grid.hpp"
#include "nelson/propagator.hpp"

namespace nelson {

struct LogSlice {
  Grid1D grid;
  double t = 0.0;
  std::vector<Complex> l;
  std::vector<Complex> l_x;
  std::vector<Complex> l_xx;
  std::vector<Complex> l_t;
  std::vector<double> rho;
  std::size_t peak = 0;  ///< index of max rho
};

/// Closed-form slice of psi_0 at time t + time_shift (time stamp t).
LogSlice one_slit_slice(const SlitConfig& cfg, const Grid1D& grid, double t,
                        double time_shift = 0.0);
/// Closed-form slice of psi_1 at time t + time_shift (time stamp t).
LogSlice two_slit_slice(const SlitConfig& cfg, const Grid1D& grid, double t,
                        double time_shift = 0.0);

/// Slices of a field known on the grid at any time. Space derivatives are
/// spectral; the time derivative uses a centred stencil of width 3
/// (order 2) or 5 (order 4) with spacing delta on log(psi(t + j delta)/psi(t)).
class GridLogSeries {
 public:
  using FieldAt = std::function<ComplexField(double)>;

  GridLogSeries(FieldAt field_at, double delta, int order, double hbar = 1.0);

  /// psi_n, evolved exactly from sqrt(rho_0).
  static GridLogSeries psi_n(const SlitConfig& cfg, const Grid1D& grid, double delta, int order);
  /// psi_0(., t + time_shift) sampled from the closed form.
  static GridLogSeries sampled_one_slit(const SlitConfig& cfg, const Grid1D& grid,
                                        double time_shift, double delta, int order);

  LogSlice slice(double t) const;
  double delta() const noexcept { return delta_; }
  int order() const noexcept { return order_; }

 private:
  FieldAt field_at_;
  double delta_;
  int order_;
  double hbar_;
};

/// Current drift (hbar/m) Im l_x.
inline double current_drift(Complex l_x, const SlitConfig& cfg) {
  return cfg.diffusion() * l_x.imag();
}
/// d/dx log rho = 2 Re l_x.
inline double log_density_slope(Complex l_x) { return 2.0 * l_x.real(); }

}  // namespace nelson
