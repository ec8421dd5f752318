#include "nelson/analytic.hpp"

#include <cmath>
#include <numbers>

#include "nelson/error.hpp"

namespace nelson {

namespace {

constexpr Complex kI{0.0, 1.0};

inline double norm_factor(double lambda) { return std::pow(lambda / std::numbers::pi, 0.25); }

}  // namespace

void SlitConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(lambda)) throw Error(ErrorCode::invalid_argument, "lambda must be > 0");
  if (!positive(a)) throw Error(ErrorCode::invalid_argument, "a must be > 0");
  if (!positive(T)) throw Error(ErrorCode::invalid_argument, "T must be > 0");
  if (!positive(hbar)) throw Error(ErrorCode::invalid_argument, "hbar must be > 0");
  if (!positive(m)) throw Error(ErrorCode::invalid_argument, "m must be > 0");
}

Complex one_slit_psi(double x, double t, const SlitConfig& cfg) {
  const Complex w{cfg.lambda, cfg.tau(t)};
  return norm_factor(cfg.lambda) / std::sqrt(w) * std::exp(-x * x / (2.0 * w));
}

double one_slit_density(double x, double t, const SlitConfig& cfg) {
  const double tau = cfg.tau(t);
  const double d = cfg.lambda * cfg.lambda + tau * tau;
  return std::sqrt(cfg.lambda / std::numbers::pi) / std::sqrt(d) *
         std::exp(-cfg.lambda * x * x / d);
}

DriftSample one_slit_drifts(double x, double t, const SlitConfig& cfg) {
  const double tau = cfg.tau(t);
  const double d = cfg.lambda * cfg.lambda + tau * tau;
  const double k = cfg.diffusion();
  DriftSample s;
  s.b_plus = k * (tau - cfg.lambda) / d * x;
  s.b_minus = k * (tau + cfg.lambda) / d * x;
  s.v = 0.5 * (s.b_plus + s.b_minus);
  s.u = 0.5 * (s.b_plus - s.b_minus);
  return s;
}

LogJet one_slit_log_jet(double x, double t, const SlitConfig& cfg) {
  const Complex w{cfg.lambda, cfg.tau(t)};
  const Complex inv = 1.0 / w;
  LogJet j;
  j.log_value = std::log(norm_factor(cfg.lambda)) - 0.5 * std::log(w) - 0.5 * x * x * inv;
  j.d_x = -x * inv;
  j.d_xx = -inv;
  // d/dtau of w is i.
  j.d_t = cfg.diffusion() * (-0.5 * kI * inv + 0.5 * kI * x * x * inv * inv);
  return j;
}

double gamma_norm(const SlitConfig& cfg) {
  return 1.0 / std::sqrt(2.0 * (1.0 + std::exp(-cfg.a * cfg.a / cfg.lambda)));
}

Complex two_slit_psi(double x, double t, const SlitConfig& cfg) {
  return gamma_norm(cfg) * (one_slit_psi(x - cfg.a, t, cfg) + one_slit_psi(x + cfg.a, t, cfg));
}

double two_slit_density(double x, double t, const SlitConfig& cfg) {
  return std::norm(two_slit_psi(x, t, cfg));
}

namespace detail {

Complex fast_tanh(Complex z) noexcept {
  const double p = 2.0 * z.real();
  const double q = 2.0 * z.imag();
  if (std::abs(p) > 40.0) {
    // |tanh - sign| < 4 e^{-40}; keep the leading imaginary correction.
    const double e = std::exp(-std::abs(p));
    const double s = p > 0.0 ? 1.0 : -1.0;
    return {s, 2.0 * e * std::sin(q)};
  }
  const double e = std::exp(p);
  const double ei = 1.0 / e;
  const double sh = 0.5 * (e - ei);
  const double ch = 0.5 * (e + ei);
  const double den = ch + std::cos(q);
  return {sh / den, std::sin(q) / den};
}

Complex log_cosh(Complex z) noexcept {
  const Complex zp = z.real() >= 0.0 ? z : -z;
  return zp + std::log(0.5 * (1.0 + std::exp(-2.0 * zp)));
}

}  // namespace detail

DriftValue two_slit_drift_forward(double x, double t, const SlitConfig& cfg) {
  const Complex c = 1.0 / Complex{cfg.lambda, cfg.tau(t)};
  const Complex w = -c * (x - cfg.a * std::tanh(cfg.a * c * x));
  double b = cfg.diffusion() * (w.real() + w.imag());
  DriftValue out;
  const double rel = two_slit_density(x, t, cfg) / one_slit_density(0.0, t, cfg);
  if (rel < kNodeFloor) {
    out.node_proximity = true;
    if (!(std::abs(b) <= kDriftClamp)) b = std::copysign(kDriftClamp, std::isnan(b) ? 1.0 : b);
  }
  out.value = b;
  return out;
}

LogJet two_slit_log_jet(double x, double t, const SlitConfig& cfg) {
  const Complex c = 1.0 / Complex{cfg.lambda, cfg.tau(t)};
  const Complex z = cfg.a * c * x;
  const Complex th = std::tanh(z);
  const double r2 = x * x + cfg.a * cfg.a;
  LogJet j;
  j.log_value = std::log(2.0 * gamma_norm(cfg) * norm_factor(cfg.lambda)) + 0.5 * std::log(c) -
                0.5 * c * r2 + detail::log_cosh(z);
  j.d_x = -c * x + cfg.a * c * th;
  j.d_xx = -c + cfg.a * cfg.a * c * c * (1.0 - th * th);
  const Complex dc = -kI * c * c;  // dc/dtau
  j.d_t = cfg.diffusion() * dc * (0.5 / c - 0.5 * r2 + cfg.a * x * th);
  return j;
}

double screen_density_rho0(double x, const SlitConfig& cfg) {
  return 0.5 * (one_slit_density(x - cfg.a, 0.0, cfg) + one_slit_density(x + cfg.a, 0.0, cfg));
}

}  // namespace nelson
