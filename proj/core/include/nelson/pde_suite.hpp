#pragma once

// End-to-end drivers for the variational certification: PDE residuals on
// [-T, 0] and the Monte-Carlo triples for the Lambda functional.

#include <cstdint>
#include <memory>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/density.hpp"
#include "nelson/diffusion.hpp"
#include "nelson/variational.hpp"

namespace nelson {

struct PdeSuiteOptions {
  double delta = 1e-3;  ///< time step of the slices and of the time stencil
  int order = 4;        ///< 2 or 4
};

struct PdeSuiteResult {
  double delta = 0.0;
  ResidualSeries eq2, eq5, eq5_flipped, eq7, product_schrodinger, fp_star, fp_ref;
  OptimalityReport optimality;
  double field_action = 0.0;
  double max_masked_fraction = 0.0;
};

/// psi_r is the one-slit packet shifted by T (closed form), psi* is psi_n
/// on the grid. The reference Fokker-Planck residual uses psi_r sampled on
/// the grid with the same time stencil as psi*.
PdeSuiteResult run_pde_suite(const SlitConfig& cfg, const Grid1D& grid, const PdeSuiteOptions& opts);

enum class GaugeSource {
  two_slit_analytic,  ///< psi* taken as the closed-form psi_1
  psi_n_grid,         ///< psi* = psi_n on the grid
};

/// Everything needed to sample one constrained triple (x, v, u') on [-T, 0].
struct Triple {
  GaugeTables gauge;
  ReferenceTables reference;
  ControlTables controls;
  DriftSpec process;
  std::vector<double> initial_density;  ///< on the table grid at t = -T
  double max_gauge_masked_fraction = 0.0;
  double field_action = 0.0;  ///< field-side action of the gauge's psi*
};

/// Reference process (one-slit drift) with v, u' of psi_r.
Triple reference_triple(const SlitConfig& cfg, const Grid1D& grid, double dt, GaugeSource gauge);
/// Process driven by psi_n with its own v*, u'*; gauge built from psi_n.
Triple optimal_triple(const SlitConfig& cfg, const Grid1D& grid, double dt);

struct TripleOptions {
  std::size_t n_paths = 200000;
  std::size_t chunk = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double fault_scale = 1.1;
  bool saddle = true;
  std::vector<double> saddle_eps = {-0.1, -0.05, 0.0, 0.05, 0.1};
  double saddle_centre = 0.0;
  double saddle_half_width = 6.0;
};

struct TripleResult {
  McEstimate lambda;
  McEstimate lambda_fault;
  McEstimate action;
  SaddleReport saddle;
  std::uint64_t clamp_events = 0;
};

TripleResult evaluate_triple(const Triple& triple, const SlitConfig& cfg, double dt,
                             const TripleOptions& opts);

}  // namespace nelson
