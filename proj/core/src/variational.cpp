#include "nelson/variational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "nelson/error.hpp"

namespace nelson {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kPathBlock = 256;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_matching(const LogSlice& a, const LogSlice& b, const char* what) {
  require_same_grid(a.grid, b.grid, what);
  if (std::abs(a.t - b.t) > 1e-12 * (1.0 + std::abs(a.t))) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + ": time stamps differ");
  }
}

const LogSlice& matching_ref(std::span<const LogSlice> ref, std::size_t k, double t) {
  if (k >= ref.size() || std::abs(ref[k].t - t) > 1e-12 * (1.0 + std::abs(t))) {
    throw Error(ErrorCode::invalid_argument, "reference slices do not match gauge times");
  }
  return ref[k];
}

std::vector<double> sort_rows_check(std::vector<double>& times, double dt) {
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-6 * dt) {
      throw Error(ErrorCode::invalid_argument, "table rows are not uniformly spaced");
    }
  }
  return times;
}

template <class Row>
TimeTable assemble(const Grid1D& grid, double dt,
                   std::vector<std::pair<double, Row>>& rows, std::size_t field) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> times;
  for (const auto& r : rows) times.push_back(r.first);
  sort_rows_check(times, dt);
  TimeTable t{grid, rows.empty() ? 0.0 : rows.front().first, dt, {}};
  for (auto& r : rows) t.rows.push_back(r.second[field]);
  return t;
}

}  // namespace

GaugeBuilder::GaugeBuilder(const SlitConfig& cfg, MaskPolicy policy) : cfg_(cfg), policy_(policy) {
  cfg_.validate();
}

GaugeSlice GaugeBuilder::next(const LogSlice& ref, const LogSlice& opt) {
  require_matching(ref, opt, "build_gauge");
  const double t = opt.t;
  if (!started_) {
    if (std::abs(t) > 1e-12) throw Error(ErrorCode::invalid_argument, "gauge must start at t = 0");
  } else if (!(t < last_t_)) {
    throw Error(ErrorCode::invalid_argument, "gauge slices must go backward in time");
  }
  const std::size_t n = opt.grid.size();
  const double hbar = cfg_.hbar, m = cfg_.m;
  GaugeSlice g;
  g.t = t;
  g.F.assign(n, kNaN);
  g.F_spatial.assign(n, kNaN);
  g.G.assign(n, kNaN);
  g.lambda.assign(n, kNaN);
  g.theta.assign(n, Complex{kNaN, kNaN});
  g.d_x.resize(n);
  g.d_xx.resize(n);
  g.d_t.resize(n);
  g.mask.assign(n, 0);
  g.weight.assign(n, 0.0);

  const double opt_floor = kMaskRelative * opt.rho[opt.peak];
  const double ref_floor = kMaskRelative * ref.rho[ref.peak];
  double total = 0.0, kept = 0.0;
  std::vector<double> raw_F(n, kNaN);
  for (std::size_t i = 0; i < n; ++i) {
    total += opt.rho[i];
    const Complex d = opt.l[i] - ref.l[i];
    g.d_x[i] = opt.l_x[i] - ref.l_x[i];
    g.d_xx[i] = opt.l_xx[i] - ref.l_xx[i];
    g.d_t[i] = opt.l_t[i] - ref.l_t[i];
    bool masked = (policy_ != MaskPolicy::finite_only && !(opt.rho[i] >= opt_floor)) ||
                  (policy_ == MaskPolicy::both && !(ref.rho[i] >= ref_floor));
    masked = masked || !finite(d) || !finite(g.d_x[i]) || !finite(g.d_xx[i]) || !finite(g.d_t[i]);
    g.mask[i] = masked ? 1 : 0;
    if (masked) continue;
    kept += opt.rho[i];
    raw_F[i] = hbar * d.imag();
    g.G[i] = d.real();
    g.lambda[i] = hbar * hbar / (2.0 * m) * g.d_x[i].real();
  }
  g.masked_fraction = total > 0.0 ? (total - kept) / total : 1.0;
  if (kept > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.mask[i]) g.weight[i] = opt.rho[i] / kept;
    }
  }

  const double period = kTwoPi * hbar;
  if (!started_) {
    const std::size_t p = opt.peak;
    if (g.mask[p]) throw Error(ErrorCode::mask_too_large, "density peak is masked");
    const double s_star = hbar * opt.l[p].imag();
    shift_ = -period * std::round(s_star / period);
  } else {
    std::size_t p = n;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.mask[i] && std::isfinite(last_F_[i]) && opt.rho[i] > best) {
        best = opt.rho[i];
        p = i;
      }
    }
    if (p == n) throw Error(ErrorCode::mask_too_large, "no common unmasked point between slices");
    shift_ -= period * std::round((raw_F[p] + shift_ - last_F_[p]) / period);
  }
  // Points seen in the previous slice follow their own history, so F stays
  // continuous in time at every x even where the spatial unwrap of psi*
  // takes a different branch.
  for (std::size_t i = 0; i < n; ++i) {
    if (g.mask[i]) continue;
    double f = raw_F[i] + shift_;
    g.F_spatial[i] = f;
    if (started_ && std::isfinite(last_F_[i])) f -= period * std::round((f - last_F_[i]) / period);
    g.F[i] = f;
    const Complex th = std::exp(Complex{g.G[i], g.F[i] / hbar});
    if (finite(th)) g.theta[i] = th;
  }
  last_F_ = g.F;
  last_t_ = t;
  started_ = true;
  return g;
}

GaugeFields build_gauge(std::span<const LogSlice> ref, std::span<const LogSlice> opt,
                        const SlitConfig& cfg, MaskPolicy policy) {
  if (ref.size() != opt.size() || ref.empty()) {
    throw Error(ErrorCode::invalid_argument, "build_gauge needs matching non-empty series");
  }
  std::vector<std::size_t> order(ref.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return opt[a].t > opt[b].t; });
  GaugeBuilder builder(cfg, policy);
  GaugeFields out{opt[0].grid, {}};
  out.slices.reserve(order.size());
  for (auto k : order) out.slices.push_back(builder.next(ref[k], opt[k]));
  std::reverse(out.slices.begin(), out.slices.end());
  return out;
}

double ResidualSeries::value() const {
  if (mean_square.empty()) return 0.0;
  return std::sqrt(pairwise_sum(mean_square) / static_cast<double>(mean_square.size()));
}

void ResidualSeries::append(const ResidualSeries& o) {
  times.insert(times.end(), o.times.begin(), o.times.end());
  mean_square.insert(mean_square.end(), o.mean_square.begin(), o.mean_square.end());
  max_masked_fraction = std::max(max_masked_fraction, o.max_masked_fraction);
}

double slice_residual(Residual which, const GaugeSlice& g, const LogSlice& ref,
                      const SlitConfig& cfg) {
  const double hbar = cfg.hbar, m = cfg.m;
  const Complex I{0.0, 1.0};
  double acc = 0.0;
  for (std::size_t i = 0; i < g.mask.size(); ++i) {
    if (g.mask[i]) continue;
    const Complex dx = g.d_x[i], dxx = g.d_xx[i], dt = g.d_t[i];
    const double F_t = hbar * dt.imag(), F_x = hbar * dx.imag(), F_xx = hbar * dxx.imag();
    const double G_t = dt.real(), G_x = dx.real(), G_xx = dxx.real();
    const double S_rx = hbar * ref.l_x[i].imag();
    const double R_rx = ref.l_x[i].real();
    const double lrx = 2.0 * R_rx;
    double e2 = 0.0;
    switch (which) {
      case Residual::eq2: {
        const double e = F_t + F_x * F_x / (2.0 * m) + S_rx * F_x / m -
                         hbar * hbar / (2.0 * m) * (G_x * G_x + G_xx + lrx * G_x);
        e2 = e * e;
        break;
      }
      case Residual::eq5:
      case Residual::eq5_flipped: {
        const double sign = which == Residual::eq5 ? 1.0 : -1.0;
        const double e = G_t + F_x * G_x / m + F_xx / (2.0 * m) + F_x * lrx / (2.0 * m) +
                         sign * S_rx * G_x / m;
        e2 = e * e;
        break;
      }
      case Residual::eq7: {
        const Complex coef = S_rx / m - I * (hbar / m) * R_rx;
        const Complex r = dt + coef * dx - I * (hbar / (2.0 * m)) * (dxx + dx * dx);
        e2 = std::norm(r);
        break;
      }
      case Residual::product_schrodinger: {
        const Complex lx = ref.l_x[i] + dx;
        const Complex r = ref.l_t[i] + dt - I * (hbar / (2.0 * m)) * (ref.l_xx[i] + dxx + lx * lx);
        e2 = std::norm(r);
        break;
      }
    }
    acc += g.weight[i] * e2;
  }
  return acc;
}

namespace {

ResidualSeries run_residual(Residual which, const GaugeFields& gauge, std::span<const LogSlice> ref,
                            const SlitConfig& cfg) {
  ResidualSeries out;
  for (std::size_t k = 0; k < gauge.slices.size(); ++k) {
    const auto& g = gauge.slices[k];
    const auto& r = matching_ref(ref, k, g.t);
    if (g.masked_fraction > kMaxMaskedFraction) {
      std::ostringstream os;
      os << "masked mass " << g.masked_fraction << " at t=" << g.t << " exceeds "
         << kMaxMaskedFraction;
      throw Error(ErrorCode::mask_too_large, os.str());
    }
    out.times.push_back(g.t);
    out.mean_square.push_back(slice_residual(which, g, r, cfg));
    out.max_masked_fraction = std::max(out.max_masked_fraction, g.masked_fraction);
  }
  return out;
}

}  // namespace

ResidualSeries residual_eq2(const GaugeFields& g, std::span<const LogSlice> ref, const SlitConfig& c) {
  return run_residual(Residual::eq2, g, ref, c);
}
ResidualSeries residual_eq5(const GaugeFields& g, std::span<const LogSlice> ref, const SlitConfig& c) {
  return run_residual(Residual::eq5, g, ref, c);
}
ResidualSeries residual_eq5_flipped(const GaugeFields& g, std::span<const LogSlice> ref,
                                    const SlitConfig& c) {
  return run_residual(Residual::eq5_flipped, g, ref, c);
}
ResidualSeries residual_eq7(const GaugeFields& g, std::span<const LogSlice> ref, const SlitConfig& c) {
  return run_residual(Residual::eq7, g, ref, c);
}
ResidualSeries residual_product_schrodinger(const GaugeFields& g, std::span<const LogSlice> ref,
                                            const SlitConfig& c) {
  return run_residual(Residual::product_schrodinger, g, ref, c);
}

double slice_fokker_planck(const LogSlice& s, const SlitConfig& cfg, double* masked_fraction) {
  const double floor = kMaskRelative * s.rho[s.peak];
  double total = 0.0, kept = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < s.rho.size(); ++i) {
    total += s.rho[i];
    if (!(s.rho[i] >= floor) || !finite(s.l_x[i]) || !finite(s.l_xx[i]) || !finite(s.l_t[i])) continue;
    const double e = 2.0 * s.l_t[i].real() +
                     cfg.diffusion() * (s.l_xx[i].imag() + 2.0 * s.l_x[i].imag() * s.l_x[i].real());
    kept += s.rho[i];
    acc += s.rho[i] * e * e;
  }
  if (masked_fraction) *masked_fraction = total > 0.0 ? (total - kept) / total : 1.0;
  return kept > 0.0 ? acc / kept : 0.0;
}

ResidualSeries fokker_planck_residual(std::span<const LogSlice> series, const SlitConfig& cfg) {
  ResidualSeries out;
  for (const auto& s : series) {
    double mf = 0.0;
    out.times.push_back(s.t);
    out.mean_square.push_back(slice_fokker_planck(s, cfg, &mf));
    out.max_masked_fraction = std::max(out.max_masked_fraction, mf);
  }
  if (out.max_masked_fraction > kMaxMaskedFraction) {
    throw Error(ErrorCode::mask_too_large, "Fokker-Planck weight mostly masked");
  }
  return out;
}

double action_density(const GaugeSlice& g, const SlitConfig& cfg) {
  const double m = cfg.m, hbar = cfg.hbar;
  double s = 0.0;
  for (std::size_t i = 0; i < g.mask.size(); ++i) {
    if (g.mask[i]) continue;
    const double F_x = hbar * g.d_x[i].imag(), G_x = g.d_x[i].real();
    s += g.weight[i] * (F_x * F_x - hbar * hbar * G_x * G_x) / (2.0 * m);
  }
  return s;
}

double boundary_action(const GaugeSlice& g, const LogSlice& ref, const SlitConfig& cfg) {
  double b = 0.0;
  for (std::size_t i = 0; i < g.mask.size(); ++i) {
    if (!g.mask[i]) b += g.weight[i] * cfg.hbar * ref.l[i].imag();
  }
  return b;
}

double field_action(const GaugeFields& gauge, std::span<const LogSlice> ref, const SlitConfig& cfg) {
  if (gauge.slices.empty()) return 0.0;
  double integral = 0.0, prev = action_density(gauge.slices[0], cfg);
  for (std::size_t k = 1; k < gauge.slices.size(); ++k) {
    const double cur = action_density(gauge.slices[k], cfg);
    integral += 0.5 * (cur + prev) * (gauge.slices[k].t - gauge.slices[k - 1].t);
    prev = cur;
  }
  const std::size_t last = gauge.slices.size() - 1;
  const auto& g_end = gauge.slices[last];
  return integral - boundary_action(g_end, matching_ref(ref, last, g_end.t), cfg);
}

OptimalityReport optimality_conditions(const GaugeSlice& g, const LogSlice& ref,
                                       const SlitConfig& cfg) {
  const double hbar = cfg.hbar, m = cfg.m;
  const double h = ref.grid.dx();
  OptimalityReport rep;
  const std::size_t n = g.mask.size();
  auto s_star = [&](std::size_t i) { return g.F_spatial[i] + hbar * ref.l[i].imag(); };
  auto s_star_x = [&](std::size_t i) { return hbar * (ref.l_x[i].imag() + g.d_x[i].imag()); };
  auto s_star_xx = [&](std::size_t i) { return hbar * (ref.l_xx[i].imag() + g.d_xx[i].imag()); };
  for (std::size_t i = 0; i < n; ++i) {
    if (g.mask[i]) continue;
    ++rep.points;
    const double S_rx = hbar * ref.l_x[i].imag();
    const double F_x = hbar * g.d_x[i].imag();
    const double v_star = (S_rx + F_x) / m;
    rep.v_discrepancy = std::max(rep.v_discrepancy, std::abs(v_star - s_star_x(i) / m));
    const double u_star = 2.0 * ref.l_x[i].real() + 4.0 * m / (hbar * hbar) * g.lambda[i];
    const double dlog_star = 2.0 * (ref.l_x[i].real() + g.d_x[i].real());
    rep.u_discrepancy = std::max(rep.u_discrepancy, std::abs(u_star - dlog_star));
    if (std::abs(g.t) < 1e-12) rep.v0_sup = std::max(rep.v0_sup, std::abs(s_star_x(i) / m));
    if (i + 1 < n && !g.mask[i + 1]) {
      const double trap = 0.5 * h * (s_star_x(i) + s_star_x(i + 1)) -
                          h * h / 12.0 * (s_star_xx(i + 1) - s_star_xx(i));
      rep.unwrap_discrepancy =
          std::max(rep.unwrap_discrepancy, std::abs(s_star(i + 1) - s_star(i) - trap));
    }
  }
  rep.unwrap_flagged = rep.unwrap_discrepancy > kUnwrapTolerance;
  return rep;
}

void merge(OptimalityReport& a, const OptimalityReport& b) {
  a.v_discrepancy = std::max(a.v_discrepancy, b.v_discrepancy);
  a.u_discrepancy = std::max(a.u_discrepancy, b.u_discrepancy);
  a.unwrap_discrepancy = std::max(a.unwrap_discrepancy, b.unwrap_discrepancy);
  a.unwrap_flagged = a.unwrap_flagged || b.unwrap_flagged;
  a.v0_sup = std::max(a.v0_sup, b.v0_sup);
  a.points += b.points;
}

OptimalityReport optimality_conditions(const GaugeFields& gauge, std::span<const LogSlice> ref,
                                       const SlitConfig& cfg) {
  OptimalityReport rep;
  for (std::size_t k = 0; k < gauge.slices.size(); ++k) {
    merge(rep, optimality_conditions(gauge.slices[k], matching_ref(ref, k, gauge.slices[k].t), cfg));
  }
  return rep;
}

TableBuilder::TableBuilder(const Grid1D& grid, double dt, const SlitConfig& cfg)
    : grid_(grid), dt_(dt), cfg_(cfg) {}

void TableBuilder::add_gauge(const GaugeSlice& g) {
  const std::size_t n = g.mask.size();
  std::array<std::vector<double>, 5> rows;
  for (auto& r : rows) r.assign(n, kNaN);
  const double hbar = cfg_.hbar, m = cfg_.m;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.mask[i]) continue;
    rows[0][i] = g.F[i];
    rows[1][i] = hbar * g.d_t[i].imag();
    rows[2][i] = hbar * g.d_x[i].imag();
    rows[3][i] = g.lambda[i];
    rows[4][i] = hbar * hbar / (2.0 * m) * g.d_xx[i].real();
  }
  gauge_.emplace_back(g.t, std::move(rows));
}

void TableBuilder::add_reference(const LogSlice& ref) {
  const std::size_t n = ref.l.size();
  std::array<std::vector<double>, 2> rows{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    rows[0][i] = cfg_.hbar * ref.l_x[i].imag();
    rows[1][i] = log_density_slope(ref.l_x[i]);
  }
  ref_.emplace_back(ref.t, std::move(rows));
  if (ref.t > s_final_t_) {
    s_final_t_ = ref.t;
    s_final_.resize(n);
    for (std::size_t i = 0; i < n; ++i) s_final_[i] = cfg_.hbar * ref.l[i].imag();
  }
}

void TableBuilder::add_controls(const LogSlice& s) {
  const std::size_t n = s.l.size();
  std::array<std::vector<double>, 2> rows{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    rows[0][i] = current_drift(s.l_x[i], cfg_);
    rows[1][i] = log_density_slope(s.l_x[i]);
  }
  ctl_.emplace_back(s.t, std::move(rows));
}

GaugeTables TableBuilder::gauge() {
  return {assemble(grid_, dt_, gauge_, 0), assemble(grid_, dt_, gauge_, 1),
          assemble(grid_, dt_, gauge_, 2), assemble(grid_, dt_, gauge_, 3),
          assemble(grid_, dt_, gauge_, 4)};
}

ReferenceTables TableBuilder::reference() {
  return {assemble(grid_, dt_, ref_, 0), assemble(grid_, dt_, ref_, 1), s_final_};
}

ControlTables TableBuilder::controls() {
  return {assemble(grid_, dt_, ctl_, 0), assemble(grid_, dt_, ctl_, 1)};
}

DriftTable TableBuilder::drift() {
  auto c = controls();
  DriftTable b{grid_, c.v.t0, dt_, {}};
  const double half_d = 0.5 * cfg_.diffusion();
  for (std::size_t k = 0; k < c.v.rows.size(); ++k) {
    std::vector<double> row(grid_.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      double v = c.v.rows[k][i] + half_d * c.u.rows[k][i];
      if (!(std::abs(v) <= kDriftClamp)) v = std::isnan(v) ? 0.0 : std::copysign(kDriftClamp, v);
      row[i] = v;
    }
    b.rows.push_back(std::move(row));
  }
  return b;
}

namespace {

void check_table_times(const TimeTable& t, const PathSamples& s, const char* what) {
  if (t.rows.size() < s.n_steps + 1 || std::abs(t.t0 - s.t0) > 1e-9 ||
      std::abs(t.dt - s.dt) > 1e-9 * s.dt) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + " table does not match the path time grid");
  }
}

}  // namespace

PathSamples sample_controls(const Ensemble& ens, const ControlTables& tables, unsigned threads) {
  if (ens.record_stride != 1) {
    throw Error(ErrorCode::invalid_argument, "path samples need every step recorded");
  }
  PathSamples s;
  s.n_paths = ens.n_paths;
  s.n_steps = ens.n_steps;
  s.t0 = ens.t0;
  s.dt = ens.dt;
  check_table_times(tables.v, s, "control");
  check_table_times(tables.u, s, "control");
  s.x = ens.positions;
  s.v.resize(s.x.size());
  s.u.resize(s.x.size());
  const Grid1D& grid = tables.v.grid;
  const std::size_t blocks = (s.n_paths + kPathBlock - 1) / kPathBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t p1 = std::min(s.n_paths, (b + 1) * kPathBlock);
    for (std::size_t k = 0; k <= s.n_steps; ++k) {
      const auto& vr = tables.v.rows[k];
      const auto& ur = tables.u.rows[k];
      for (std::size_t p = b * kPathBlock; p < p1; ++p) {
        const std::size_t idx = k * s.n_paths + p;
        const auto w = cubic_weights(grid, s.x[idx]);
        s.v[idx] = w.apply(vr);
        s.u[idx] = w.apply(ur);
      }
    }
  });
  return s;
}

void PathContributions::append(const PathContributions& o) {
  value.insert(value.end(), o.value.begin(), o.value.end());
  control.insert(control.end(), o.control.begin(), o.control.end());
}

McEstimate summarize(const PathContributions& c, bool use_control) {
  if (c.value.size() != c.control.size()) {
    throw Error(ErrorCode::invalid_argument, "contribution arrays differ in length");
  }
  std::vector<double> y, z;
  y.reserve(c.value.size());
  z.reserve(c.value.size());
  for (std::size_t i = 0; i < c.value.size(); ++i) {
    if (std::isfinite(c.value[i]) && std::isfinite(c.control[i])) {
      y.push_back(c.value[i]);
      z.push_back(c.control[i]);
    }
  }
  McEstimate e;
  e.n_paths = y.size();
  e.masked_fraction =
      c.value.empty() ? 0.0
                      : 1.0 - static_cast<double>(y.size()) / static_cast<double>(c.value.size());
  if (e.masked_fraction > kMaxMaskedFraction) {
    std::ostringstream os;
    os << "masked path fraction " << e.masked_fraction << " exceeds " << kMaxMaskedFraction;
    throw Error(ErrorCode::mask_too_large, os.str());
  }
  if (y.size() < 2) throw Error(ErrorCode::too_few_samples, "need at least two unmasked paths");
  const double n = static_cast<double>(y.size());
  const double my = pairwise_sum(y) / n;
  const double mz = pairwise_sum(z) / n;
  if (use_control) {
    std::vector<double> cyz(y.size()), czz(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      cyz[i] = (y[i] - my) * (z[i] - mz);
      czz[i] = (z[i] - mz) * (z[i] - mz);
    }
    const double vzz = pairwise_sum(czz);
    e.beta = vzz > 0.0 ? pairwise_sum(cyz) / vzz : 0.0;
  }
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - e.beta * z[i];
  e.value = pairwise_sum(r) / n;
  for (auto& v : r) v = (v - e.value) * (v - e.value);
  e.std_error = std::sqrt(pairwise_sum(r) / (n - 1.0) / n);
  return e;
}

PathContributions lambda_contributions(const PathSamples& s, const GaugeTables& g,
                                       const SlitConfig& cfg, double u_scale, unsigned threads) {
  for (const TimeTable* t : {&g.F, &g.F_t, &g.F_x, &g.lambda, &g.lambda_x}) {
    check_table_times(*t, s, "gauge");
  }
  const Grid1D& grid = g.F.grid;
  const std::size_t N = s.n_steps;
  const double half_d = 0.5 * cfg.diffusion();
  const double period = kTwoPi * cfg.hbar;
  PathContributions out{std::vector<double>(s.n_paths), std::vector<double>(s.n_paths)};
  const std::size_t blocks = (s.n_paths + kPathBlock - 1) / kPathBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t p0 = b * kPathBlock, p1 = std::min(s.n_paths, p0 + kPathBlock);
    const std::size_t n = p1 - p0;
    std::vector<double> y(n, 0.0), mart(n, 0.0), f_prev(n), pred(n);
    for (std::size_t k = 0; k <= N; ++k) {
      const double w = (k == 0 || k == N) ? 0.5 * s.dt : s.dt;
      for (std::size_t p = p0; p < p1; ++p) {
        const std::size_t idx = k * s.n_paths + p, j = p - p0;
        const auto cw = cubic_weights(grid, s.x[idx]);
        const double F_t = cw.apply(g.F_t.rows[k]), F_x = cw.apply(g.F_x.rows[k]);
        const double lam = cw.apply(g.lambda.rows[k]), lam_x = cw.apply(g.lambda_x.rows[k]);
        const double v = s.v[idx], u = s.u[idx];
        y[j] -= w * (F_t + v * F_x - lam * u_scale * u - lam_x);
        // F is only defined modulo the period; follow the branch along the path.
        const double f = cw.apply_periodic(g.F.rows[k], period);
        if (k > 0) {
          const double d = f - pred[j];
          y[j] += f - period * std::nearbyint(d / period) - f_prev[j];
        }
        if (k < N) {
          const double dx = s.x[idx + s.n_paths] - s.x[idx];
          mart[j] += F_x * (dx - (v + half_d * u) * s.dt);
          f_prev[j] = f;
          pred[j] = f + F_t * s.dt + F_x * dx;
        }
      }
    }
    for (std::size_t p = p0; p < p1; ++p) {
      out.value[p] = y[p - p0];
      out.control[p] = mart[p - p0];
    }
  });
  return out;
}

PathContributions action_contributions(const PathSamples& s, const ReferenceTables& r,
                                       const SlitConfig& cfg, unsigned threads) {
  check_table_times(r.S_x, s, "reference");
  check_table_times(r.dlog_rho, s, "reference");
  const Grid1D& grid = r.S_x.grid;
  const std::size_t N = s.n_steps;
  const double m = cfg.m, hb2 = cfg.hbar * cfg.hbar;
  PathContributions out{std::vector<double>(s.n_paths), std::vector<double>(s.n_paths, 0.0)};
  const std::size_t blocks = (s.n_paths + kPathBlock - 1) / kPathBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t p0 = b * kPathBlock, p1 = std::min(s.n_paths, p0 + kPathBlock);
    std::vector<double> y(p1 - p0, 0.0);
    for (std::size_t k = 0; k <= N; ++k) {
      const double w = (k == 0 || k == N) ? 0.5 * s.dt : s.dt;
      for (std::size_t p = p0; p < p1; ++p) {
        const std::size_t idx = k * s.n_paths + p;
        const auto cw = cubic_weights(grid, s.x[idx]);
        const double dv = s.v[idx] - cw.apply(r.S_x.rows[k]) / m;
        const double du = s.u[idx] - cw.apply(r.dlog_rho.rows[k]);
        y[p - p0] += w * (0.5 * m * dv * dv - hb2 / (8.0 * m) * du * du);
        if (k == N) y[p - p0] -= cw.apply(r.S_final);
      }
    }
    for (std::size_t p = p0; p < p1; ++p) out.value[p] = y[p - p0];
  });
  return out;
}

McEstimate lambda_functional(const PathSamples& s, const GaugeTables& g, const SlitConfig& cfg,
                             double u_scale) {
  return summarize(lambda_contributions(s, g, cfg, u_scale), true);
}

McEstimate action_I(const PathSamples& s, const ReferenceTables& r, const SlitConfig& cfg) {
  return summarize(action_contributions(s, r, cfg), false);
}

double bump(double x, double centre, double half_width) {
  const double z = (x - centre) / half_width;
  const double q = 1.0 - z * z;
  return q > 0.0 ? std::exp(1.0 - 1.0 / q) : 0.0;
}

SaddleReport saddle_spot_check(const PathSamples& s, const GaugeTables& g,
                               const ReferenceTables& r, const SlitConfig& cfg,
                               std::span<const double> eps, double centre, double half_width,
                               std::size_t step_stride) {
  if (step_stride == 0) throw Error(ErrorCode::invalid_argument, "step stride must be positive");
  for (const TimeTable* t : {&g.F_t, &g.F_x, &g.lambda, &g.lambda_x, &r.S_x, &r.dlog_rho}) {
    check_table_times(*t, s, "saddle");
  }
  const double m = cfg.m, hb2 = cfg.hbar * cfg.hbar;
  const Grid1D& grid = g.F.grid;
  SaddleReport rep;
  for (std::size_t k = 0; k <= s.n_steps; k += step_stride) {
    for (std::size_t p = 0; p < s.n_paths; ++p) {
      const std::size_t idx = k * s.n_paths + p;
      const double x = s.x[idx];
      const auto cw = cubic_weights(grid, x);
      const double S_x = cw.apply(r.S_x.rows[k]), dl = cw.apply(r.dlog_rho.rows[k]);
      const double F_t = cw.apply(g.F_t.rows[k]), F_x = cw.apply(g.F_x.rows[k]);
      const double lam = cw.apply(g.lambda.rows[k]), lam_x = cw.apply(g.lambda_x.rows[k]);
      const double v0 = s.v[idx], u0 = s.u[idx];
      if (!std::isfinite(F_t + F_x + lam + lam_x + v0 + u0)) continue;
      auto h = [&](double v, double u) {
        const double a = v - S_x / m, c = u - dl;
        return 0.5 * m * a * a - hb2 / (8.0 * m) * c * c - F_t - v * F_x + lam * u + lam_x;
      };
      const double h0 = h(v0, u0);
      const double tol = 1e-12 * (1.0 + std::abs(h0));
      const double phi = bump(x, centre, half_width);
      ++rep.points;
      for (double e : eps) {
        const double dv = h(v0 + e * phi, u0) - h0;
        const double du = h(v0, u0 + e * phi) - h0;
        if (dv < -tol) ++rep.v_violations;
        if (du > tol) ++rep.u_violations;
        const double q = e * e * phi * phi;
        const double err = std::max(std::abs(dv - 0.5 * m * q), std::abs(du + hb2 / (8.0 * m) * q));
        rep.max_quadratic_error = std::max(rep.max_quadratic_error, err / (1.0 + std::abs(h0)));
      }
    }
  }
  return rep;
}

void write_gauge_csv(const std::filesystem::path& path, const Grid1D& grid, const GaugeSlice& g) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string());
  os << "x,F,G,lambda,theta_re,theta_im\n";
  char buf[200];
  for (std::size_t i = 0; i < g.F.size(); ++i) {
    const int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.x(i),
                                g.F[i], g.G[i], g.lambda[i], g.theta[i].real(), g.theta[i].imag());
    os.write(buf, n);
  }
}

}  // namespace nelson
