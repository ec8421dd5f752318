#pragma once

// Histogram density estimates, Born-relation checks and fringe analysis.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/diffusion.hpp"
#include "nelson/grid.hpp"
#include "nelson/propagator.hpp"

namespace nelson {

/// A density sampled at the grid points (one value per cell).
struct GridDensity {
  Grid1D grid;
  std::vector<double> values;
};

struct DensityEstimate {
  Grid1D grid;
  double t = 0.0;
  std::vector<double> rho_hat;
  std::size_t n_samples = 0;
  double bandwidth = 0.0;
  std::size_t out_of_grid = 0;

  double out_of_grid_fraction() const noexcept {
    return n_samples ? static_cast<double>(out_of_grid) / static_cast<double>(n_samples) : 0.0;
  }
  GridDensity as_grid_density() const { return {grid, rho_hat}; }
};

inline constexpr std::size_t kMinSamples = 1000;

/// Histogram over the grid cells, optionally convolved with a Gaussian of
/// standard deviation `bandwidth`, normalised to unit mass over the grid.
DensityEstimate estimate(std::span<const double> samples, const Grid1D& grid,
                         double bandwidth = 0.0, double t = 0.0);

double l1_distance(const GridDensity& a, const GridDensity& b);
double l1_distance(const DensityEstimate& est, const GridDensity& reference);

/// Averages of a finely sampled density over the cells of a coarser grid
/// whose spacing is an integer multiple of the fine spacing.
GridDensity cell_average(const GridDensity& fine, const Grid1D& coarse);
/// Cell averages of a function by 8-point Gauss-Legendre quadrature per cell.
GridDensity cell_average(const std::function<double(double)>& rho, const Grid1D& grid);

struct BornEntry {
  double t = 0.0;
  double l1 = 0.0;
  double out_of_grid_fraction = 0.0;
  bool passed = false;
};

struct BornReport {
  std::vector<BornEntry> entries;
  double threshold = 0.0;
  bool passed = false;
};

/// Compares the ensemble marginals at `times` with |psi|^2 of the field
/// whose time stamp matches (MissingField otherwise). The densities are
/// compared as cell averages on `density_grid`.
BornReport born_check(const Ensemble& ens, std::span<const double> times,
                      std::span<const ComplexField> wavefields, const Grid1D& density_grid,
                      double threshold);

struct FringeReport {
  std::vector<double> maxima;
  std::vector<double> minima;
  double mean_spacing = 0.0;
  double visibility = 0.0;
};

inline constexpr double kFringeProminence = 1e-4;

/// Locates fringes by topographic prominence. When `n_samples` is given the
/// input is treated as a histogram and the prominence floor is raised to
/// five Poisson standard errors of the highest bin.
FringeReport fringe_analysis(const GridDensity& rho, std::optional<std::size_t> n_samples = {});
FringeReport fringe_analysis(const DensityEstimate& est);

/// L1 distance between the screen density and |psi_1(., 0)|^2, evaluated
/// without cancellation.
double rho0_vs_psi1_check(const SlitConfig& cfg, const Grid1D& grid);

void write_density_csv(const std::filesystem::path& path, const GridDensity& rho,
                       const char* value_column = "rho_hat");
std::string fringe_report_json(const FringeReport& report);

}  // namespace nelson
