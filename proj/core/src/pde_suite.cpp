#include "nelson/pde_suite.hpp"

#include <algorithm>
#include <cmath>

#include "nelson/error.hpp"

namespace nelson {

namespace {

std::size_t interval_steps(const SlitConfig& cfg, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(cfg.T / dt));
  if (n == 0 || std::abs(static_cast<double>(n) * dt - cfg.T) > 1e-9 * dt) {
    throw Error(ErrorCode::invalid_argument, "time step must divide T");
  }
  return n;
}

void push(ResidualSeries& s, double t, double ms) {
  s.times.push_back(t);
  s.mean_square.push_back(ms);
}

void reverse(ResidualSeries& s) {
  std::reverse(s.times.begin(), s.times.end());
  std::reverse(s.mean_square.begin(), s.mean_square.end());
}

}  // namespace

PdeSuiteResult run_pde_suite(const SlitConfig& cfg, const Grid1D& grid, const PdeSuiteOptions& opts) {
  cfg.validate();
  const std::size_t n = interval_steps(cfg, opts.delta);
  const auto opt_series = GridLogSeries::psi_n(cfg, grid, opts.delta, opts.order);
  const auto ref_grid = GridLogSeries::sampled_one_slit(cfg, grid, cfg.T, opts.delta, opts.order);
  GaugeBuilder builder(cfg);
  PdeSuiteResult res;
  res.delta = opts.delta;
  double prev_action = 0.0, prev_t = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = j == n ? -cfg.T : -opts.delta * static_cast<double>(j);
    const LogSlice ref = one_slit_slice(cfg, grid, t, cfg.T);
    const LogSlice opt = opt_series.slice(t);
    const GaugeSlice g = builder.next(ref, opt);
    if (g.masked_fraction > kMaxMaskedFraction) {
      throw Error(ErrorCode::mask_too_large, "psi_n weight mostly masked");
    }
    res.max_masked_fraction = std::max(res.max_masked_fraction, g.masked_fraction);
    push(res.eq2, t, slice_residual(Residual::eq2, g, ref, cfg));
    push(res.eq5, t, slice_residual(Residual::eq5, g, ref, cfg));
    push(res.eq5_flipped, t, slice_residual(Residual::eq5_flipped, g, ref, cfg));
    push(res.eq7, t, slice_residual(Residual::eq7, g, ref, cfg));
    push(res.product_schrodinger, t, slice_residual(Residual::product_schrodinger, g, ref, cfg));
    double mf = 0.0;
    push(res.fp_star, t, slice_fokker_planck(opt, cfg, &mf));
    push(res.fp_ref, t, slice_fokker_planck(ref_grid.slice(t), cfg, &mf));
    res.fp_ref.max_masked_fraction = std::max(res.fp_ref.max_masked_fraction, mf);
    merge(res.optimality, optimality_conditions(g, ref, cfg));

    const double a = action_density(g, cfg);
    if (j == 0) {
      res.field_action = -boundary_action(g, ref, cfg);
    } else {
      res.field_action += 0.5 * (a + prev_action) * (prev_t - t);
    }
    prev_action = a;
    prev_t = t;
  }
  for (auto* s : {&res.eq2, &res.eq5, &res.eq5_flipped, &res.eq7, &res.product_schrodinger,
                  &res.fp_star, &res.fp_ref}) {
    reverse(*s);
    s->max_masked_fraction = std::max(s->max_masked_fraction, res.max_masked_fraction);
  }
  return res;
}

Triple reference_triple(const SlitConfig& cfg, const Grid1D& grid, double dt, GaugeSource source) {
  cfg.validate();
  const std::size_t n = interval_steps(cfg, dt);
  std::unique_ptr<GridLogSeries> grid_opt;
  if (source == GaugeSource::psi_n_grid) {
    grid_opt = std::make_unique<GridLogSeries>(GridLogSeries::psi_n(cfg, grid, dt, 4));
  }
  GaugeBuilder builder(cfg, grid_opt ? MaskPolicy::optimal : MaskPolicy::finite_only);
  TableBuilder tables(grid, dt, cfg);
  double max_masked = 0.0, action = 0.0;
  std::vector<double> init;
  double prev_a = 0.0, prev_t = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = j == n ? -cfg.T : -dt * static_cast<double>(j);
    const LogSlice ref = one_slit_slice(cfg, grid, t, cfg.T);
    const LogSlice opt = grid_opt ? grid_opt->slice(t) : two_slit_slice(cfg, grid, t);
    const GaugeSlice g = builder.next(ref, opt);
    max_masked = std::max(max_masked, g.masked_fraction);
    tables.add_gauge(g);
    tables.add_reference(ref);
    tables.add_controls(ref);
    const double a = action_density(g, cfg);
    if (j == 0) {
      action = -boundary_action(g, ref, cfg);
    } else {
      action += 0.5 * (a + prev_a) * (prev_t - t);
    }
    prev_a = a;
    prev_t = t;
  }
  init.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) init[i] = one_slit_density(grid.x(i), 0.0, cfg);
  return Triple{tables.gauge(), tables.reference(), tables.controls(),
                DriftSpec::one_slit(cfg, cfg.T), std::move(init), max_masked, action};
}

Triple optimal_triple(const SlitConfig& cfg, const Grid1D& grid, double dt) {
  cfg.validate();
  const std::size_t n = interval_steps(cfg, dt);
  const auto opt_series = GridLogSeries::psi_n(cfg, grid, dt, 4);
  GaugeBuilder builder(cfg);
  TableBuilder tables(grid, dt, cfg);
  double max_masked = 0.0, action = 0.0;
  std::vector<double> init;
  double prev_a = 0.0, prev_t = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = j == n ? -cfg.T : -dt * static_cast<double>(j);
    const LogSlice ref = one_slit_slice(cfg, grid, t, cfg.T);
    const LogSlice opt = opt_series.slice(t);
    const GaugeSlice g = builder.next(ref, opt);
    max_masked = std::max(max_masked, g.masked_fraction);
    tables.add_gauge(g);
    tables.add_reference(ref);
    tables.add_controls(opt);
    const double a = action_density(g, cfg);
    if (j == 0) {
      action = -boundary_action(g, ref, cfg);
    } else {
      action += 0.5 * (a + prev_a) * (prev_t - t);
    }
    prev_a = a;
    prev_t = t;
    if (j == n) init = opt.rho;
  }
  auto drift = std::make_shared<const DriftTable>(tables.drift());
  return Triple{tables.gauge(), tables.reference(), tables.controls(),
                DriftSpec::from_table(cfg, std::move(drift)), std::move(init), max_masked, action};
}

TripleResult evaluate_triple(const Triple& tr, const SlitConfig& cfg, double dt,
                             const TripleOptions& opts) {
  if (opts.chunk == 0) throw Error(ErrorCode::invalid_argument, "chunk must be positive");
  const Grid1D& grid = tr.gauge.F.grid;
  PathContributions ok, fault, act;
  TripleResult res;
  bool saddle_done = !opts.saddle;
  for (std::size_t start = 0; start < opts.n_paths; start += opts.chunk) {
    const std::size_t np = std::min(opts.chunk, opts.n_paths - start);
    const auto init = sample_initial(tr.initial_density, grid, np, opts.seed, start);
    SimulateOptions so;
    so.threads = opts.threads;
    so.path_offset = start;
    const Ensemble ens = simulate(tr.process, init, -cfg.T, 0.0, dt, opts.seed, so);
    res.clamp_events += ens.clamp_events;
    const PathSamples s = sample_controls(ens, tr.controls, opts.threads);
    ok.append(lambda_contributions(s, tr.gauge, cfg, 1.0, opts.threads));
    fault.append(lambda_contributions(s, tr.gauge, cfg, opts.fault_scale, opts.threads));
    act.append(action_contributions(s, tr.reference, cfg, opts.threads));
    if (!saddle_done) {
      res.saddle = saddle_spot_check(s, tr.gauge, tr.reference, cfg, opts.saddle_eps,
                                     opts.saddle_centre, opts.saddle_half_width);
      saddle_done = true;
    }
  }
  res.lambda = summarize(ok, true);
  res.lambda_fault = summarize(fault, true);
  res.action = summarize(act, false);
  return res;
}

}  // namespace nelson
