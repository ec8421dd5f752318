#pragma once

// Euler-Maruyama simulation of Nelson diffusions with counter-based noise.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/grid.hpp"
#include "nelson/numeric.hpp"
#include "nelson/propagator.hpp"

namespace nelson {

/// Forward drift sampled on a grid at times t0 + j*dt.
using DriftTable = TimeTable;

/// b+ = (hbar/m)(Re + Im) d_x log psi on the grid, clamped at kDriftClamp.
std::vector<double> forward_drift_on_grid(const ComplexField& field, double hbar = 1.0,
                                          double m = 1.0);

/// Drift table of psi_n on [t0, t0 + n_rows*dt] built one exact spectral step at a time.
DriftTable psi_n_drift_table(const SlitConfig& cfg, const Grid1D& grid, double t0, double dt,
                             std::size_t n_intervals);

enum class DriftKind { zero, one_slit, two_slit, grid_interpolated };

struct DriftSpec {
  DriftKind kind = DriftKind::zero;
  SlitConfig cfg;
  /// Wavefunction time is simulation time plus this shift (T for the
  /// reference process on [-T, 0]).
  double time_shift = 0.0;
  std::shared_ptr<const DriftTable> table;

  static DriftSpec zero(const SlitConfig& cfg);
  static DriftSpec one_slit(const SlitConfig& cfg, double time_shift = 0.0);
  static DriftSpec two_slit(const SlitConfig& cfg, double time_shift = 0.0);
  static DriftSpec from_table(const SlitConfig& cfg, std::shared_ptr<const DriftTable> table);
};

struct SimulateOptions {
  /// Keep every record_stride-th step; must divide the number of steps.
  std::size_t record_stride = 1;
  unsigned threads = 0;
  /// Global index of the first path, so chunked runs reproduce one big run.
  std::uint64_t path_offset = 0;
};

struct Ensemble {
  std::size_t n_paths = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double dt = 0.0;  ///< effective step (t1 - t0) / n_steps
  std::size_t n_steps = 0;
  std::size_t record_stride = 1;
  std::uint64_t seed = 0;
  std::uint64_t path_offset = 0;
  std::uint64_t clamp_events = 0;
  std::vector<double> positions;  ///< row-major [recorded row][path]

  std::size_t n_rows() const noexcept { return n_steps / record_stride + 1; }
  std::size_t step_of_row(std::size_t r) const noexcept { return r * record_stride; }
  double time_of_step(std::size_t k) const noexcept {
    return k == n_steps ? t1 : t0 + static_cast<double>(k) * dt;
  }
  std::span<const double> row(std::size_t r) const {
    return {positions.data() + r * n_paths, n_paths};
  }
};

/// Inverse-CDF draws from a grid density that is constant on each cell.
std::vector<double> sample_initial(std::span<const double> density, const Grid1D& grid,
                                   std::size_t n_paths, std::uint64_t seed,
                                   std::uint64_t path_offset = 0);

Ensemble simulate(const DriftSpec& spec, std::span<const double> init, double t0, double t1,
                  double dt, std::uint64_t seed, const SimulateOptions& opts = {});

/// Index of the step nearest to t (ties go to the earlier step).
std::size_t nearest_step(const Ensemble& ens, double t);
/// Positions at nearest_step(t); OutOfRange if t is outside [t0, t1] or the step was not kept.
std::span<const double> marginal(const Ensemble& ens, double t);

/// CSV with header step,t,path,x keeping every `stride`-th recorded row.
void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& ens,
                        std::size_t stride = 1);
/// 32-byte little-endian header (u64 n_paths, u64 n_rows - 1, f64 t0, f64 row spacing)
/// followed by the recorded rows as f64.
void write_ensemble_binary(const std::filesystem::path& path, const Ensemble& ens);
/// Inverse of write_ensemble_binary; every row is treated as recorded and the seed is unknown.
Ensemble read_ensemble_binary(const std::filesystem::path& path);

}  // namespace nelson
