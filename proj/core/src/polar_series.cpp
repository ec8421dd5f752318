#include "nelson/polar_series.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "nelson/error.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

namespace {

template <class Jet>
LogSlice from_jets(const Grid1D& grid, double t, Jet&& jet) {
  const std::size_t n = grid.size();
  LogSlice s{grid, t, std::vector<Complex>(n), std::vector<Complex>(n), std::vector<Complex>(n),
             std::vector<Complex>(n), std::vector<double>(n), 0};
  for (std::size_t i = 0; i < n; ++i) {
    const LogJet j = jet(grid.x(i));
    s.l[i] = j.log_value;
    s.l_x[i] = j.d_x;
    s.l_xx[i] = j.d_xx;
    s.l_t[i] = j.d_t;
    s.rho[i] = std::exp(2.0 * j.log_value.real());
    if (s.rho[i] > s.rho[s.peak]) s.peak = i;
  }
  return s;
}

Complex log_ratio(Complex a, Complex b) {
  return {std::log(std::abs(a) / std::abs(b)), std::arg(a * std::conj(b))};
}

}  // namespace

LogSlice one_slit_slice(const SlitConfig& cfg, const Grid1D& grid, double t, double shift) {
  return from_jets(grid, t, [&](double x) { return one_slit_log_jet(x, t + shift, cfg); });
}

LogSlice two_slit_slice(const SlitConfig& cfg, const Grid1D& grid, double t, double shift) {
  return from_jets(grid, t, [&](double x) { return two_slit_log_jet(x, t + shift, cfg); });
}

GridLogSeries::GridLogSeries(FieldAt field_at, double delta, int order, double hbar)
    : field_at_(std::move(field_at)), delta_(delta), order_(order), hbar_(hbar) {
  if (order != 2 && order != 4) throw Error(ErrorCode::invalid_argument, "stencil order must be 2 or 4");
  if (!(delta > 0.0)) throw Error(ErrorCode::invalid_argument, "stencil spacing must be positive");
}

GridLogSeries GridLogSeries::psi_n(const SlitConfig& cfg, const Grid1D& grid, double delta,
                                   int order) {
  auto ev = std::make_shared<const ExactEvolver>(psi_n_initial(cfg, grid), cfg.hbar, cfg.m);
  return GridLogSeries([ev](double t) { return ev->at(t); }, delta, order, cfg.hbar);
}

GridLogSeries GridLogSeries::sampled_one_slit(const SlitConfig& cfg, const Grid1D& grid,
                                              double shift, double delta, int order) {
  return GridLogSeries(
      [cfg, grid, shift](double t) {
        return sample_field(grid, t, [&](double x) { return one_slit_psi(x, t + shift, cfg); });
      },
      delta, order, cfg.hbar);
}

LogSlice GridLogSeries::slice(double t) const {
  const ComplexField cur = field_at_(t);
  const Grid1D& g = cur.grid;
  const std::size_t n = g.size();
  const auto polar = polar_decompose(cur, hbar_);
  const Spectral sp(g);
  const auto d1 = sp.derivative(cur.values, 1);
  const auto d2 = sp.derivative(cur.values, 2);

  LogSlice s{g, t, std::vector<Complex>(n), std::vector<Complex>(n), std::vector<Complex>(n),
             std::vector<Complex>(n), polar.rho, polar.peak_index};
  for (std::size_t i = 0; i < n; ++i) {
    s.l[i] = {polar.R[i], polar.S[i] / hbar_};
    s.l_x[i] = d1[i] / cur.values[i];
    s.l_xx[i] = d2[i] / cur.values[i] - s.l_x[i] * s.l_x[i];
  }

  if (order_ == 2) {
    const auto fp = field_at_(t + delta_), fm = field_at_(t - delta_);
    for (std::size_t i = 0; i < n; ++i) {
      s.l_t[i] = (log_ratio(fp.values[i], cur.values[i]) - log_ratio(fm.values[i], cur.values[i])) /
                 (2.0 * delta_);
    }
  } else {
    const auto fm2 = field_at_(t - 2.0 * delta_), fm1 = field_at_(t - delta_);
    const auto fp1 = field_at_(t + delta_), fp2 = field_at_(t + 2.0 * delta_);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex c = cur.values[i];
      s.l_t[i] = (log_ratio(fm2.values[i], c) - 8.0 * log_ratio(fm1.values[i], c) +
                  8.0 * log_ratio(fp1.values[i], c) - log_ratio(fp2.values[i], c)) /
                 (12.0 * delta_);
    }
  }
  return s;
}

}  // namespace nelson
