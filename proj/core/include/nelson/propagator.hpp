#pragma once

// Spectral free-Schroedinger propagation on a periodic grid, polar
// decomposition, residual checks and the construction of psi_n.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/grid.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

/// Absolute density floor below which logs and phases are not trusted.
inline constexpr double kRhoFloor = 1e-30;
/// Threshold on the top-octave L2 mass fraction that raises AliasingRisk.
inline constexpr double kAliasingThreshold = 1e-8;

struct ComplexField {
  ComplexField(Grid1D g, double time, std::vector<Complex> v);

  Grid1D grid;
  double t;
  std::vector<Complex> values;
  bool aliasing_risk = false;

  /// Discrete L2 norm sqrt(sum |psi|^2 dx).
  double norm() const;
  std::vector<double> density() const;
};

template <class Fn>
ComplexField sample_field(const Grid1D& grid, double t, Fn&& psi) {
  std::vector<Complex> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = psi(grid.x(i));
  return ComplexField(grid, t, std::move(v));
}

/// (rho, S, R) with S the unwrapped phase times hbar and R = log(rho)/2.
struct PolarField {
  Grid1D grid;
  double t = 0.0;
  std::vector<double> rho;
  std::vector<double> S;
  std::vector<double> R;
  std::vector<std::uint8_t> floor_flag;  ///< rho below kRhoFloor
  std::vector<std::uint8_t> unwrap_flag;  ///< ambiguous phase step on entry to this point
  std::size_t unwrap_ambiguities = 0;
  std::size_t peak_index = 0;
};

/// Precomputed phase table exp(-i hbar k^2 dt / 2m); immutable after construction.
class FreePropagator {
 public:
  FreePropagator(const Grid1D& grid, double dt, double hbar = 1.0, double m = 1.0);

  double dt() const noexcept { return dt_; }
  /// Advances by dt. Sets aliasing_risk on the result per kAliasingThreshold.
  ComplexField apply(const ComplexField& field) const;
  /// Advances n steps of dt, checking aliasing only at the end.
  ComplexField apply_steps(const ComplexField& field, std::size_t n) const;

 private:
  Spectral spectral_;
  double dt_;
  std::vector<Complex> phase_;
};

/// Exact free evolution of one initial field to arbitrary times (the
/// spectrum is computed once).
class ExactEvolver {
 public:
  ExactEvolver(const ComplexField& initial, double hbar = 1.0, double m = 1.0);

  /// Field at time t; sets aliasing_risk per kAliasingThreshold.
  ComplexField at(double t) const;
  const Grid1D& grid() const noexcept { return spectral_.grid(); }

 private:
  Spectral spectral_;
  double t0_;
  double coef_;
  std::vector<Complex> spec0_;
};

ComplexField propagate_free(const ComplexField& field, double dt, double hbar = 1.0,
                            double m = 1.0);

PolarField polar_decompose(const ComplexField& field, double hbar = 1.0);
ComplexField reconstruct(const PolarField& polar, double hbar = 1.0);

/// Relative residual ||d_t psi - (i hbar / 2m) psi_xx|| / ||psi|| at the
/// centre of a 3-point (second order) or 5-point (fourth order) stencil of
/// uniformly spaced fields. This is the rho/sum(rho)-weighted L2 norm of
/// the residual divided by psi.
double schrodinger_residual(std::span<const ComplexField> stencil, double hbar = 1.0,
                            double m = 1.0);
double schrodinger_residual(const ComplexField& prev, const ComplexField& cur,
                            const ComplexField& next, double hbar = 1.0, double m = 1.0);

/// Trapezoidal time integral of ||d_x psi(., t)||^2 over increasing times.
double finite_action(std::span<const ComplexField> fields);

/// sqrt(rho_0) on the grid at t = 0.
ComplexField psi_n_initial(const SlitConfig& cfg, const Grid1D& grid);

/// psi_n(x, 0) = sqrt(rho_0(x)), propagated exactly to each requested time.
std::vector<ComplexField> build_psi_n(const SlitConfig& cfg, const Grid1D& grid,
                                      std::span<const double> times);

/// field_<label>_t<time>.csv with the time printed to six decimals.
std::string field_filename(const std::string& label, double t);
/// Columns x,re,im,rho,S at 17 significant digits.
void write_field_csv(const std::filesystem::path& path, const ComplexField& field,
                     double hbar = 1.0);

}  // namespace nelson
