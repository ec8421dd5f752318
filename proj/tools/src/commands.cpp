#include "nelson_lab/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>

#include "nelson/density.hpp"
#include "nelson/diffusion.hpp"
#include "nelson/error.hpp"
#include "nelson/pde_suite.hpp"
#include "nelson/propagator.hpp"

#ifndef NELSON_LAB_VERSION
#define NELSON_LAB_VERSION "unknown"
#endif

namespace nelson::lab {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string timed_name(const std::string& stem, const std::string& label, double t,
                       const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "_t%.6f", t);
  return stem + "_" + label + buf + ext;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::io, "cannot open " + p.string());
  os << s << '\n';
}

std::vector<ComplexField> fields_at(const RunConfig& cfg, Which which,
                                    std::span<const double> times) {
  if (which == Which::psi_n) return build_psi_n(cfg.slit, cfg.grid, times);
  std::vector<ComplexField> out;
  for (double t : times) {
    if (which == Which::one_slit) {
      out.push_back(sample_field(cfg.grid, t, [&](double x) { return one_slit_psi(x, t, cfg.slit); }));
    } else {
      out.push_back(sample_field(cfg.grid, t, [&](double x) { return two_slit_psi(x, t, cfg.slit); }));
    }
  }
  return out;
}

json fringe_json(const FringeReport& r) { return json::parse(fringe_report_json(r)); }

json fringe_entry(double t, const GridDensity& rho, std::optional<std::size_t> n) {
  try {
    return {{"t", t}, {"status", "ok"}, {"report", fringe_json(fringe_analysis(rho, n))}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_fringes) throw;
    return {{"t", t}, {"status", "no_fringes"}};
  }
}

void finish(const std::string& name, const RunConfig& cfg, const RunContext& ctx,
            Clock::time_point start, CommandResult& res) {
  const std::string file = "manifest_" + name + ".json";
  res.files.push_back(file);
  const json m{
      {"command", name},
      {"code_version", code_version()},
      {"config", to_json(cfg)},
      {"seed", cfg.seed},
      {"threads", ctx.threads},
      {"wall_time_s", std::chrono::duration<double>(Clock::now() - start).count()},
      {"files", res.files},
      {"passed", res.passed},
      {"summary", res.summary},
  };
  write_text(ctx.out_dir / file, m.dump(2));
}

std::size_t steps_between(double a, double b, double dt) {
  return static_cast<std::size_t>(std::llround((b - a) / dt));
}

struct Check {
  json& table;
  bool& passed;

  void below(const std::string& name, double value, double threshold) {
    const bool ok = std::isfinite(value) && value <= threshold;
    table[name] = {{"value", value}, {"threshold", threshold}, {"passed", ok}};
    passed = passed && ok;
  }
  void above(const std::string& name, double value, double threshold) {
    const bool ok = std::isfinite(value) && value > threshold;
    table[name] = {{"value", value}, {"threshold", threshold}, {"passed", ok}};
    passed = passed && ok;
  }
};

template <class Fn>
auto guarded(const std::string& check, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw CheckError(check, e.what());
  }
}

json estimate_json(const McEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"beta", e.beta}, {"n_paths", e.n_paths},
          {"masked_fraction", e.masked_fraction}};
}

double z_score(const McEstimate& e) { return std::abs(e.value) / e.std_error; }

}  // namespace

const char* code_version() noexcept { return NELSON_LAB_VERSION; }

Which parse_which(const std::string& s) {
  if (s == "one_slit") return Which::one_slit;
  if (s == "two_slit") return Which::two_slit;
  if (s == "psi_n") return Which::psi_n;
  throw ConfigError("--which: expected one_slit, two_slit or psi_n, got '" + s + "'");
}

const char* to_string(Which w) noexcept {
  switch (w) {
    case Which::one_slit: return "one_slit";
    case Which::two_slit: return "two_slit";
    case Which::psi_n: return "psi_n";
  }
  return "?";
}

CommandResult cmd_wavefield(const RunConfig& cfg, Which which, const RunContext& ctx) {
  const auto start = Clock::now();
  std::filesystem::create_directories(ctx.out_dir);
  const std::string label = to_string(which);
  CommandResult res;
  json norms = json::array(), fringes = json::array();
  for (const auto& f : fields_at(cfg, which, cfg.times)) {
    const auto field_file = field_filename(label, f.t);
    write_field_csv(ctx.out_dir / field_file, f, cfg.slit.hbar);
    const GridDensity rho{f.grid, f.density()};
    const auto density_file = timed_name("density", label, f.t, ".csv");
    write_density_csv(ctx.out_dir / density_file, rho, "rho");
    res.files.insert(res.files.end(), {field_file, density_file});
    double max_imag = 0.0;
    for (const auto& v : f.values) max_imag = std::max(max_imag, std::abs(v.imag()));
    norms.push_back({{"t", f.t}, {"norm", f.norm()}, {"max_abs_imag", max_imag},
                     {"aliasing_risk", f.aliasing_risk}});
    if (which != Which::one_slit) fringes.push_back(fringe_entry(f.t, rho, std::nullopt));
  }
  if (which == Which::psi_n) {
    std::vector<double> r0(cfg.grid.size());
    for (std::size_t i = 0; i < r0.size(); ++i) r0[i] = screen_density_rho0(cfg.grid.x(i), cfg.slit);
    write_density_csv(ctx.out_dir / "rho0.csv", {cfg.grid, r0}, "rho0");
    res.files.push_back("rho0.csv");
  }
  if (which != Which::one_slit) {
    const std::string file = "fringes_" + label + ".json";
    write_text(ctx.out_dir / file, json{{"source", "field"}, {"entries", fringes}}.dump(2));
    res.files.push_back(file);
  }
  res.summary = {{"which", label}, {"fields", norms}};
  finish("wavefield_" + label, cfg, ctx, start, res);
  return res;
}

CommandResult cmd_simulate(const RunConfig& cfg, Which which, const RunContext& ctx) {
  if (cfg.times.size() < 2) throw ConfigError("times: simulate needs at least two report times");
  const auto start = Clock::now();
  std::filesystem::create_directories(ctx.out_dir);
  const std::string label = to_string(which);
  const double t0 = cfg.times.front(), t1 = cfg.times.back();
  const std::size_t n_steps = steps_between(t0, t1, cfg.dt);
  std::size_t stride = n_steps;
  for (double t : cfg.times) stride = std::gcd(stride, steps_between(t0, t, cfg.dt));

  const auto fields = fields_at(cfg, which, cfg.times);
  DriftSpec spec;
  switch (which) {
    case Which::one_slit: spec = DriftSpec::one_slit(cfg.slit); break;
    case Which::two_slit: spec = DriftSpec::two_slit(cfg.slit); break;
    case Which::psi_n:
      spec = DriftSpec::from_table(cfg.slit, std::make_shared<const DriftTable>(psi_n_drift_table(
                                                 cfg.slit, cfg.grid, t0, cfg.dt, n_steps)));
      break;
  }
  const auto init = sample_initial(fields.front().density(), cfg.grid, cfg.n_paths, cfg.seed);
  SimulateOptions opts;
  opts.record_stride = stride;
  opts.threads = ctx.threads;
  const auto ens = simulate(spec, init, t0, t1, cfg.dt, cfg.seed, opts);

  CommandResult res;
  const std::string ens_file = "ensemble_" + label + ".bin";
  write_ensemble_binary(ctx.out_dir / ens_file, ens);
  res.files.push_back(ens_file);
  for (double t : cfg.times) {
    const auto est = estimate(marginal(ens, t), cfg.density_grid, 0.0, t);
    const auto file = timed_name("density", label, t, ".csv");
    write_density_csv(ctx.out_dir / file, est.as_grid_density());
    res.files.push_back(file);
  }
  const auto born = born_check(ens, cfg.times, fields, cfg.density_grid, cfg.threshold("born_l1"));
  json entries = json::array();
  for (const auto& e : born.entries) {
    entries.push_back({{"t", e.t}, {"l1", e.l1}, {"out_of_grid_fraction", e.out_of_grid_fraction},
                       {"passed", e.passed}});
  }
  const double total_steps = static_cast<double>(ens.n_paths) * static_cast<double>(ens.n_steps);
  const json born_json{{"which", label},
                       {"threshold", born.threshold},
                       {"passed", born.passed},
                       {"entries", entries},
                       {"clamp_events", ens.clamp_events},
                       {"clamp_fraction", total_steps > 0 ? ens.clamp_events / total_steps : 0.0}};
  const std::string born_file = "born_" + label + ".json";
  write_text(ctx.out_dir / born_file, born_json.dump(2));
  res.files.push_back(born_file);
  res.passed = born.passed;
  res.summary = born_json;
  finish("simulate_" + label, cfg, ctx, start, res);
  return res;
}

CommandResult cmd_verify(const RunConfig& cfg, const RunContext& ctx) {
  const auto start = Clock::now();
  std::filesystem::create_directories(ctx.out_dir);
  CommandResult res;
  json checks = json::object(), details = json::object();
  Check check{checks, res.passed};

  const auto pde = guarded("pde_suite", [&] {
    return run_pde_suite(cfg.slit, cfg.grid, PdeSuiteOptions{cfg.dt, 4});
  });
  check.below("eq2", pde.eq2.value(), cfg.threshold("eq2"));
  check.below("eq5", pde.eq5.value(), cfg.threshold("eq5"));
  check.below("eq7", pde.eq7.value(), cfg.threshold("eq7"));
  check.below("product_schrodinger", pde.product_schrodinger.value(), cfg.threshold("product_schrodinger"));
  check.below("fokker_planck_star", pde.fp_star.value(), cfg.threshold("fokker_planck_star"));
  check.below("fokker_planck_ref", pde.fp_ref.value(), cfg.threshold("fokker_planck_ref"));
  check.below("optimality", std::max(pde.optimality.v_discrepancy, pde.optimality.u_discrepancy),
              cfg.threshold("optimality"));
  check.below("v0_sup", pde.optimality.v0_sup, cfg.threshold("v0_sup"));
  details["pde"] = {{"eq5_flipped_sign", pde.eq5_flipped.value()},
                    {"unwrap_discrepancy", pde.optimality.unwrap_discrepancy},
                    {"unwrap_flagged", pde.optimality.unwrap_flagged},
                    {"max_masked_fraction", pde.max_masked_fraction},
                    {"field_action", pde.field_action}};

  TripleOptions topt;
  topt.n_paths = cfg.n_paths;
  topt.seed = cfg.seed;
  topt.threads = ctx.threads;
  const auto ref = guarded("lambda_reference", [&] {
    topt.saddle = false;
    return evaluate_triple(reference_triple(cfg.slit, cfg.grid, cfg.dt, GaugeSource::two_slit_analytic),
                           cfg.slit, cfg.dt, topt);
  });
  const auto opt = guarded("lambda_optimal", [&] {
    topt.saddle = true;
    return evaluate_triple(optimal_triple(cfg.slit, cfg.grid, cfg.dt), cfg.slit, cfg.dt, topt);
  });
  check.below("lambda_reference_z", z_score(ref.lambda), cfg.threshold("lambda_reference_z"));
  check.below("lambda_optimal_z", z_score(opt.lambda), cfg.threshold("lambda_optimal_z"));
  check.above("lambda_fault_z", std::min(z_score(ref.lambda_fault), z_score(opt.lambda_fault)),
              cfg.threshold("lambda_fault_z"));
  check.below("saddle_violations",
              static_cast<double>(opt.saddle.v_violations + opt.saddle.u_violations),
              cfg.threshold("saddle_violations"));
  check.below("action_agreement_z", std::abs(opt.action.value - pde.field_action) / opt.action.std_error,
              cfg.threshold("action_agreement_z"));
  details["reference_triple"] = {{"lambda", estimate_json(ref.lambda)},
                                 {"lambda_fault", estimate_json(ref.lambda_fault)},
                                 {"action", estimate_json(ref.action)},
                                 {"clamp_events", ref.clamp_events}};
  details["optimal_triple"] = {{"lambda", estimate_json(opt.lambda)},
                               {"lambda_fault", estimate_json(opt.lambda_fault)},
                               {"action", estimate_json(opt.action)},
                               {"saddle_points", opt.saddle.points},
                               {"saddle_max_quadratic_error", opt.saddle.max_quadratic_error},
                               {"clamp_events", opt.clamp_events}};

  const double action = guarded("finite_action", [&] {
    const auto n = steps_between(0.0, cfg.slit.T, cfg.dt);
    std::vector<ComplexField> fs;
    fs.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = k == n ? cfg.slit.T : static_cast<double>(k) * cfg.dt;
      fs.push_back(sample_field(cfg.grid, t, [&](double x) { return one_slit_psi(x, t, cfg.slit); }));
    }
    return finite_action(fs);
  });
  const double expected = cfg.slit.T / (2.0 * cfg.slit.lambda);
  check.below("finite_action", std::abs(action - expected), cfg.threshold("finite_action"));
  details["finite_action"] = {{"value", action}, {"expected", expected}};

  check.below("rho0_vs_psi1", guarded("rho0_vs_psi1", [&] { return rho0_vs_psi1_check(cfg.slit, cfg.grid); }),
              cfg.threshold("rho0_vs_psi1"));

  const json verdict{{"passed", res.passed}, {"checks", checks}, {"details", details}};
  write_text(ctx.out_dir / "verify.json", verdict.dump(2));
  res.files.push_back("verify.json");
  res.summary = {{"checks", checks}};
  finish("verify", cfg, ctx, start, res);
  return res;
}

CommandResult cmd_fringes(const RunConfig& cfg, Which which, const RunContext& ctx,
                          const std::optional<std::filesystem::path>& ensemble) {
  const auto start = Clock::now();
  std::filesystem::create_directories(ctx.out_dir);
  const std::string label = to_string(which);
  CommandResult res;
  json entries = json::array();
  auto emit = [&](double t, const GridDensity& rho, std::optional<std::size_t> n) {
    const auto file = timed_name("fringe_density", label, t, ".csv");
    write_density_csv(ctx.out_dir / file, rho, "density");
    res.files.push_back(file);
    entries.push_back(fringe_entry(t, rho, n));
  };
  if (ensemble) {
    const auto ens = read_ensemble_binary(*ensemble);
    for (double t : cfg.times) {
      const auto est = estimate(marginal(ens, t), cfg.density_grid, 0.0, t);
      emit(t, est.as_grid_density(), est.n_samples);
    }
  } else {
    for (const auto& f : fields_at(cfg, which, cfg.times)) emit(f.t, {f.grid, f.density()}, std::nullopt);
  }
  const std::string file = "fringes_" + label + ".json";
  const json report{{"source", ensemble ? "ensemble" : "field"}, {"entries", entries}};
  write_text(ctx.out_dir / file, report.dump(2));
  res.files.push_back(file);
  res.summary = report;
  finish("fringes_" + label, cfg, ctx, start, res);
  return res;
}

}  // namespace nelson::lab
