#pragma once

// Closed-form one-slit and two-slit wavefunctions, densities and Nelson
// drifts for free motion in one dimension.
//
// With general hbar and m every formula is evaluated at the scaled time
// tau = hbar*t/m; in natural units tau = t.

#include <complex>

namespace nelson {

using Complex = std::complex<double>;

/// Physical parameters of the experiment.
struct SlitConfig {
  double lambda = 0.1;  ///< initial packet width parameter
  double a = 3.0;       ///< slit half-separation; slits sit at +-a
  double T = 1.0;       ///< source-to-screen flight time
  double hbar = 1.0;
  double m = 1.0;

  /// Throws InvalidArgument unless every parameter is finite and positive.
  void validate() const;

  double tau(double t) const noexcept { return hbar * t / m; }
  double diffusion() const noexcept { return hbar / m; }
};

/// Relative density below which the two-slit drift is treated as sitting on a node.
inline constexpr double kNodeFloor = 1e-12;
/// Magnitude at which drifts are clamped.
inline constexpr double kDriftClamp = 1e3;

/// Forward, backward, current and osmotic drift at one point.
struct DriftSample {
  double b_plus = 0.0;
  double b_minus = 0.0;
  double v = 0.0;
  double u = 0.0;
};

struct DriftValue {
  double value = 0.0;
  bool node_proximity = false;
};

/// log psi together with its first and second x-derivatives and its
/// t-derivative (all complex).
struct LogJet {
  Complex log_value;
  Complex d_x;
  Complex d_xx;
  Complex d_t;
};

Complex one_slit_psi(double x, double t, const SlitConfig& cfg);
double one_slit_density(double x, double t, const SlitConfig& cfg);
DriftSample one_slit_drifts(double x, double t, const SlitConfig& cfg);
LogJet one_slit_log_jet(double x, double t, const SlitConfig& cfg);

/// Normalisation constant of the two-slit superposition. Defined for a >= 0.
double gamma_norm(const SlitConfig& cfg);

Complex two_slit_psi(double x, double t, const SlitConfig& cfg);
double two_slit_density(double x, double t, const SlitConfig& cfg);

/// Forward drift of the two-slit process from the analytic log-derivative.
/// When |psi_1|^2 drops below kNodeFloor times the one-slit peak density the
/// result is flagged and saturated at kDriftClamp.
DriftValue two_slit_drift_forward(double x, double t, const SlitConfig& cfg);

/// Log-domain jet of psi_1; stays finite where psi_1 itself underflows.
LogJet two_slit_log_jet(double x, double t, const SlitConfig& cfg);

/// Screen density: mean of the two single-slit densities at t = 0.
double screen_density_rho0(double x, const SlitConfig& cfg);

namespace detail {

/// tanh for complex arguments using one exp and one sincos.
Complex fast_tanh(Complex z) noexcept;

/// log cosh(z), continuous along real x for z = k*x with Re k > 0.
Complex log_cosh(Complex z) noexcept;

}  // namespace detail

}  // namespace nelson
