#pragma once

// Gauge fields F, G, lambda, theta between a reference wavefunction psi_r
// and the optimal one psi*, the PDE residuals they must satisfy, and
// Monte-Carlo evaluation of the action I and the Lambda functional.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/diffusion.hpp"
#include "nelson/grid.hpp"
#include "nelson/numeric.hpp"
#include "nelson/polar_series.hpp"

namespace nelson {

/// Points where a weight density drops below this fraction of its peak are masked.
inline constexpr double kMaskRelative = 1e-12;
/// Residuals and expectations refuse to run when more mass than this is masked.
inline constexpr double kMaxMaskedFraction = 0.2;

/// Gauge data at one time. d = G + iF/hbar, so theta = exp(d).
struct GaugeSlice {
  double t = 0.0;
  std::vector<double> F;
  std::vector<double> F_spatial;  ///< same branch at every x of this slice, before tracking in time
  std::vector<double> G;
  std::vector<double> lambda;
  std::vector<Complex> theta;  ///< NaN where masked or not representable
  std::vector<Complex> d_x;
  std::vector<Complex> d_xx;
  std::vector<Complex> d_t;
  std::vector<std::uint8_t> mask;  ///< 1 = excluded
  std::vector<double> weight;      ///< rho* / sum(rho*) over unmasked points
  double masked_fraction = 0.0;    ///< rho* mass excluded by the mask
};

struct GaugeFields {
  Grid1D grid;
  std::vector<GaugeSlice> slices;  ///< increasing time
};

/// Which points a gauge slice excludes. Non-finite log data is always masked.
enum class MaskPolicy {
  optimal,          ///< rho* below kMaskRelative of its peak
  both,             ///< rho* or rho_r below kMaskRelative of their peaks
  finite_only,      ///< only non-finite points (closed-form log data)
};

/// Builds gauge slices one time at a time, walking backward from t = 0.
/// F carries the branch of S* - S_r that is continuous in time; the 2 pi hbar
/// ambiguity is fixed at t = 0 by bringing F(x_peak, 0) closest to
/// -S_r(x_peak, 0).
class GaugeBuilder {
 public:
  GaugeBuilder(const SlitConfig& cfg, MaskPolicy policy = MaskPolicy::optimal);

  /// The first call must be at t = 0 and times must decrease afterwards.
  GaugeSlice next(const LogSlice& ref, const LogSlice& opt);

 private:
  SlitConfig cfg_;
  MaskPolicy policy_;
  bool started_ = false;
  double last_t_ = 0.0;
  double shift_ = 0.0;
  std::vector<double> last_F_;
};

/// Whole-interval convenience wrapper; the slices may be given in either
/// time order but must include t = 0.
GaugeFields build_gauge(std::span<const LogSlice> ref, std::span<const LogSlice> opt,
                        const SlitConfig& cfg, MaskPolicy policy = MaskPolicy::optimal);

/// Per-time mean squares of a residual, weighted by the mask weights.
struct ResidualSeries {
  std::vector<double> times;
  std::vector<double> mean_square;
  double max_masked_fraction = 0.0;

  /// RMS over the interior times.
  double value() const;
  void append(const ResidualSeries& other);
};

/// Hamilton-Jacobi-type equation for (F, G).
ResidualSeries residual_eq2(const GaugeFields& gauge, std::span<const LogSlice> ref,
                            const SlitConfig& cfg);
/// Transport equation for G; the S_r coupling enters with a plus sign.
ResidualSeries residual_eq5(const GaugeFields& gauge, std::span<const LogSlice> ref,
                            const SlitConfig& cfg);
/// Same equation with the S_r coupling sign flipped, kept as a diagnostic.
ResidualSeries residual_eq5_flipped(const GaugeFields& gauge, std::span<const LogSlice> ref,
                                    const SlitConfig& cfg);
/// Linear equation for theta, evaluated as residual / theta.
ResidualSeries residual_eq7(const GaugeFields& gauge, std::span<const LogSlice> ref,
                            const SlitConfig& cfg);
/// Free Schrodinger residual of psi_r * theta, relative to psi_r * theta.
ResidualSeries residual_product_schrodinger(const GaugeFields& gauge, std::span<const LogSlice> ref,
                                            const SlitConfig& cfg);
/// Continuity equation of |psi|^2 for a slice series, divided by rho and
/// weighted by rho over its unmasked points.
ResidualSeries fokker_planck_residual(std::span<const LogSlice> series, const SlitConfig& cfg);

enum class Residual { eq2, eq5, eq5_flipped, eq7, product_schrodinger };
/// Mean square of one residual at one slice.
double slice_residual(Residual which, const GaugeSlice& g, const LogSlice& ref,
                      const SlitConfig& cfg);
double slice_fokker_planck(const LogSlice& s, const SlitConfig& cfg, double* masked_fraction);

/// rho*-weighted integrand F_x^2/2m - hbar^2 G_x^2/2m of the optimal action at one time.
double action_density(const GaugeSlice& g, const SlitConfig& cfg);
/// rho*-weighted mean of S_r at one time.
double boundary_action(const GaugeSlice& g, const LogSlice& ref, const SlitConfig& cfg);

/// Field-side value of the action for the optimal process:
/// int int rho* [F_x^2/2m - hbar^2 G_x^2/2m] dx dt - sum rho_0 S_r(., 0) dx.
double field_action(const GaugeFields& gauge, std::span<const LogSlice> ref,
                    const SlitConfig& cfg);

struct OptimalityReport {
  double v_discrepancy = 0.0;       ///< sup |(S_r,x + F_x)/m - S*_x/m|
  double u_discrepancy = 0.0;       ///< sup |d log rho_r + 4m lambda/hbar^2 - d log rho*|
  double unwrap_discrepancy = 0.0;  ///< sup |S*(i+1) - S*(i) - corrected trapezoid of S*_x| on F_spatial
  bool unwrap_flagged = false;
  double v0_sup = 0.0;  ///< sup |S*_x/m| at t = 0
  std::size_t points = 0;
};

inline constexpr double kUnwrapTolerance = 1e-3;

/// Pointwise optimality identities on the unmasked region of one slice.
OptimalityReport optimality_conditions(const GaugeSlice& g, const LogSlice& ref,
                                       const SlitConfig& cfg);
void merge(OptimalityReport& into, const OptimalityReport& from);
OptimalityReport optimality_conditions(const GaugeFields& gauge, std::span<const LogSlice> ref,
                                       const SlitConfig& cfg);

// ---- Monte Carlo over paths -------------------------------------------

/// Tables feeding the path expectations, one row per simulation step.
struct GaugeTables {
  TimeTable F, F_t, F_x, lambda, lambda_x;
};
struct ReferenceTables {
  TimeTable S_x;       ///< d/dx S_r
  TimeTable dlog_rho;  ///< d/dx log rho_r
  std::vector<double> S_final;  ///< S_r(., t_end)
};
struct ControlTables {
  TimeTable v;  ///< current drift
  TimeTable u;  ///< u' = d/dx log rho
};

/// Incrementally fills the tables from slices in any fixed time order;
/// finish() sorts rows by time.
class TableBuilder {
 public:
  TableBuilder(const Grid1D& grid, double dt, const SlitConfig& cfg);
  void add_gauge(const GaugeSlice& g);
  void add_reference(const LogSlice& ref);
  void add_controls(const LogSlice& process);
  GaugeTables gauge();
  ReferenceTables reference();
  ControlTables controls();
  /// Forward drift v + (hbar/2m) u' from the control slices, clamped.
  DriftTable drift();

 private:
  Grid1D grid_;
  double dt_;
  SlitConfig cfg_;
  std::vector<std::pair<double, std::array<std::vector<double>, 5>>> gauge_;
  std::vector<std::pair<double, std::array<std::vector<double>, 2>>> ref_;
  std::vector<std::pair<double, std::array<std::vector<double>, 2>>> ctl_;
  std::vector<double> s_final_;
  double s_final_t_ = -1e300;
};

/// Positions with the controls v and u' read off along them; all arrays
/// are [step][path].
struct PathSamples {
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> x;
  std::vector<double> v;
  std::vector<double> u;

  double at(const std::vector<double>& a, std::size_t k, std::size_t p) const {
    return a[k * n_paths + p];
  }
};

/// Requires an ensemble recorded at every step. NaN controls mark masked points.
PathSamples sample_controls(const Ensemble& ens, const ControlTables& tables, unsigned threads = 0);

/// Per-path Monte-Carlo terms; a NaN value marks a masked path.
struct PathContributions {
  std::vector<double> value;
  std::vector<double> control;

  void append(const PathContributions& other);
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double beta = 0.0;  ///< control-variate coefficient (0 when unused)
  std::size_t n_paths = 0;
  double masked_fraction = 0.0;
};

/// Mean with pairwise summation, optionally with the regression control
/// variate. Throws MaskTooLarge above kMaxMaskedFraction masked paths.
McEstimate summarize(const PathContributions& c, bool use_control);

/// Lambda in its integration-by-parts form. `u_scale` multiplies u' inside
/// the integrand. The control is the martingale sum F_x (dx - b dt).
PathContributions lambda_contributions(const PathSamples& s, const GaugeTables& g,
                                       const SlitConfig& cfg, double u_scale = 1.0,
                                       unsigned threads = 0);
/// Action I with trapezoidal quadrature in time.
PathContributions action_contributions(const PathSamples& s, const ReferenceTables& r,
                                       const SlitConfig& cfg, unsigned threads = 0);

McEstimate lambda_functional(const PathSamples& s, const GaugeTables& g, const SlitConfig& cfg,
                             double u_scale = 1.0);
McEstimate action_I(const PathSamples& s, const ReferenceTables& r, const SlitConfig& cfg);

struct SaddleReport {
  std::size_t points = 0;
  std::size_t v_violations = 0;  ///< v-perturbation lowered the integrand
  std::size_t u_violations = 0;  ///< u'-perturbation raised the integrand
  double max_quadratic_error = 0.0;  ///< sup of |change - predicted quadratic| / (1 + |h|)
};

/// Smooth bump exp(1 - 1/(1 - s^2)), s = (x - centre)/half_width, zero for |s| >= 1.
double bump(double x, double centre, double half_width);

/// Evaluates the pointwise (I + Lambda) integrand at v* + eps phi and
/// u'* + eps phi on every sampled (step, path) with step % step_stride == 0.
SaddleReport saddle_spot_check(const PathSamples& s, const GaugeTables& g,
                               const ReferenceTables& r, const SlitConfig& cfg,
                               std::span<const double> eps, double centre, double half_width,
                               std::size_t step_stride = 50);

/// CSV columns x,F,G,lambda,theta_re,theta_im for one slice.
void write_gauge_csv(const std::filesystem::path& path, const Grid1D& grid, const GaugeSlice& g);

}  // namespace nelson
