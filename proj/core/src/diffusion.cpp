#include "nelson/diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nelson/error.hpp"
#include "nelson/numeric.hpp"
#include "nelson/rng.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

namespace {

constexpr std::size_t kBlock = 512;

struct StepDrift {
  DriftKind kind;
  double D;
  double lin = 0.0;
  Complex c{};
  double a = 0.0;
  const DriftTable* table = nullptr;
  const std::vector<double>* row = nullptr;

  double operator()(double x) const {
    switch (kind) {
      case DriftKind::zero:
        return 0.0;
      case DriftKind::one_slit:
        return lin * x;
      case DriftKind::two_slit: {
        const Complex w = -c * (x - a * detail::fast_tanh(a * c * x));
        return D * (w.real() + w.imag());
      }
      case DriftKind::grid_interpolated: {
        const Grid1D& g = table->grid;
        const double xc = std::clamp(x, g.x_min(), g.x(g.size() - 1));
        return cubic_at(g, *row, xc);
      }
    }
    return 0.0;
  }
};

StepDrift prepare(const DriftSpec& spec, double t) {
  StepDrift s{spec.kind, spec.cfg.diffusion()};
  const double tau = spec.cfg.tau(t + spec.time_shift);
  const double lam = spec.cfg.lambda;
  switch (spec.kind) {
    case DriftKind::zero:
      break;
    case DriftKind::one_slit:
      s.lin = s.D * (tau - lam) / (lam * lam + tau * tau);
      break;
    case DriftKind::two_slit:
      s.c = 1.0 / Complex{lam, tau};
      s.a = spec.cfg.a;
      break;
    case DriftKind::grid_interpolated: {
      const DriftTable& tb = *spec.table;
      s.table = &tb;
      try {
        s.row = &tb.rows[tb.row_index(t)];
      } catch (const Error&) {
        std::ostringstream os;
        os << "drift table does not cover t=" << t;
        throw Error(ErrorCode::out_of_range, os.str());
      }
      break;
    }
  }
  return s;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::io, "truncated ensemble file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

std::vector<double> forward_drift_on_grid(const ComplexField& field, double hbar, double m) {
  const Spectral sp(field.grid);
  const auto d = sp.derivative(field.values, 1);
  std::vector<double> b(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Complex w = d[i] / field.values[i];
    double v = hbar / m * (w.real() + w.imag());
    if (!(std::abs(v) <= kDriftClamp)) v = std::isnan(v) ? 0.0 : std::copysign(kDriftClamp, v);
    b[i] = v;
  }
  return b;
}

DriftTable psi_n_drift_table(const SlitConfig& cfg, const Grid1D& grid, double t0, double dt,
                             std::size_t n_intervals) {
  DriftTable tb{grid, t0, dt, {}};
  tb.rows.reserve(n_intervals + 1);
  constexpr std::size_t kBatch = 64;
  std::vector<double> times;
  for (std::size_t j0 = 0; j0 <= n_intervals; j0 += kBatch) {
    times.clear();
    for (std::size_t j = j0; j <= std::min(n_intervals, j0 + kBatch - 1); ++j) {
      times.push_back(t0 + dt * static_cast<double>(j));
    }
    for (const auto& f : build_psi_n(cfg, grid, times)) {
      tb.rows.push_back(forward_drift_on_grid(f, cfg.hbar, cfg.m));
    }
  }
  return tb;
}

DriftSpec DriftSpec::zero(const SlitConfig& cfg) { return {DriftKind::zero, cfg, 0.0, nullptr}; }

DriftSpec DriftSpec::one_slit(const SlitConfig& cfg, double shift) {
  return {DriftKind::one_slit, cfg, shift, nullptr};
}

DriftSpec DriftSpec::two_slit(const SlitConfig& cfg, double shift) {
  return {DriftKind::two_slit, cfg, shift, nullptr};
}

DriftSpec DriftSpec::from_table(const SlitConfig& cfg, std::shared_ptr<const DriftTable> table) {
  if (!table || table->rows.empty()) throw Error(ErrorCode::invalid_argument, "empty drift table");
  return {DriftKind::grid_interpolated, cfg, 0.0, std::move(table)};
}

std::vector<double> sample_initial(std::span<const double> density, const Grid1D& grid,
                                   std::size_t n_paths, std::uint64_t seed,
                                   std::uint64_t path_offset) {
  if (density.size() != grid.size()) {
    throw Error(ErrorCode::invalid_argument, "density size does not match grid");
  }
  std::vector<double> cdf(density.size() + 1, 0.0);
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (!(density[i] >= 0.0) || !std::isfinite(density[i])) {
      throw Error(ErrorCode::invalid_argument, "density must be finite and nonnegative");
    }
    cdf[i + 1] = cdf[i] + density[i] * grid.dx();
  }
  const double mass = cdf.back();
  if (!(mass >= 1e-300)) throw Error(ErrorCode::zero_mass, "density integrates to zero");
  const CounterRng rng(seed);
  std::vector<double> out(n_paths);
  const double left = grid.x_min() - 0.5 * grid.dx();
  for (std::size_t p = 0; p < n_paths; ++p) {
    const double u = rng.uniform(Stream::initial, path_offset + p, 0) * mass;
    const auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    const std::size_t cell =
        std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1, density.size() - 1);
    const double w = cdf[cell + 1] - cdf[cell];
    const double frac = w > 0.0 ? (u - cdf[cell]) / w : 0.5;
    out[p] = left + (static_cast<double>(cell) + std::clamp(frac, 0.0, 1.0)) * grid.dx();
  }
  return out;
}

Ensemble simulate(const DriftSpec& spec, std::span<const double> init, double t0, double t1,
                  double dt, std::uint64_t seed, const SimulateOptions& opts) {
  spec.cfg.validate();
  if (!(dt > 0.0) || dt > 1e-2) throw Error(ErrorCode::invalid_argument, "dt must lie in (0, 1e-2]");
  if (!(t1 > t0)) throw Error(ErrorCode::invalid_argument, "simulation requires t1 > t0");
  if (init.empty()) throw Error(ErrorCode::invalid_argument, "no initial positions");
  const double span = t1 - t0;
  const auto n_steps = static_cast<std::size_t>(std::llround(span / dt));
  if (n_steps == 0 || std::abs(static_cast<double>(n_steps) * dt - span) >= dt * 1e-9) {
    throw Error(ErrorCode::invalid_argument, "dt must divide t1 - t0");
  }
  if (opts.record_stride == 0 || n_steps % opts.record_stride != 0) {
    throw Error(ErrorCode::invalid_argument, "record_stride must divide the number of steps");
  }
  if (n_steps / 2 + 1 > 0xffffffffull) throw Error(ErrorCode::invalid_argument, "too many steps");
  if (spec.kind == DriftKind::grid_interpolated && !spec.table) {
    throw Error(ErrorCode::invalid_argument, "grid drift requires a table");
  }

  Ensemble ens;
  ens.n_paths = init.size();
  ens.t0 = t0;
  ens.t1 = t1;
  ens.n_steps = n_steps;
  ens.dt = span / static_cast<double>(n_steps);
  ens.record_stride = opts.record_stride;
  ens.seed = seed;
  ens.path_offset = opts.path_offset;
  ens.positions.assign(ens.n_rows() * ens.n_paths, 0.0);

  const double h = ens.dt;
  const double sd = std::sqrt(spec.cfg.diffusion() * h);
  const CounterRng rng(seed);
  const std::size_t n_blocks = (ens.n_paths + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> clamps(n_blocks, 0);

  std::vector<StepDrift> drifts;
  drifts.reserve(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) drifts.push_back(prepare(spec, ens.time_of_step(k)));

  parallel_for(n_blocks, opts.threads, [&](std::size_t b) {
    const std::size_t p0 = b * kBlock;
    const std::size_t np = std::min(kBlock, ens.n_paths - p0);
    std::vector<double> x(init.begin() + static_cast<std::ptrdiff_t>(p0),
                          init.begin() + static_cast<std::ptrdiff_t>(p0 + np));
    std::vector<double> spare(np);
    std::copy(x.begin(), x.end(), ens.positions.begin() + static_cast<std::ptrdiff_t>(p0));
    std::uint64_t local_clamps = 0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      const StepDrift& drift = drifts[k];
      const bool even = (k % 2) == 0;
      for (std::size_t i = 0; i < np; ++i) {
        double z;
        if (even) {
          const auto pr = rng.normal_pair(Stream::increments, opts.path_offset + p0 + i,
                                          static_cast<std::uint32_t>(k / 2));
          z = pr[0];
          spare[i] = pr[1];
        } else {
          z = spare[i];
        }
        double bk = drift(x[i]);
        if (!(std::abs(bk) <= kDriftClamp)) {
          ++local_clamps;
          if (!std::isnan(bk)) bk = std::copysign(kDriftClamp, bk);
        }
        const double nx = x[i] + bk * h + sd * z;
        if (!std::isfinite(nx)) {
          std::ostringstream os;
          os << "path " << opts.path_offset + p0 + i << " became non-finite at step " << k + 1
             << " (x=" << x[i] << ", drift=" << bk << ")";
          throw Error(ErrorCode::non_finite_state, os.str());
        }
        x[i] = nx;
      }
      if ((k + 1) % ens.record_stride == 0) {
        const std::size_t r = (k + 1) / ens.record_stride;
        std::copy(x.begin(), x.end(),
                  ens.positions.begin() + static_cast<std::ptrdiff_t>(r * ens.n_paths + p0));
      }
    }
    clamps[b] = local_clamps;
  });
  for (auto c : clamps) ens.clamp_events += c;
  return ens;
}

std::size_t nearest_step(const Ensemble& ens, double t) {
  const double tol = 1e-9 * ens.dt;
  if (!(t >= ens.t0 - tol && t <= ens.t1 + tol)) {
    std::ostringstream os;
    os << "time " << t << " outside [" << ens.t0 << ", " << ens.t1 << "]";
    throw Error(ErrorCode::out_of_range, os.str());
  }
  const double s = std::max(0.0, (t - ens.t0) / ens.dt);
  auto k = static_cast<std::size_t>(std::floor(s));
  if (s - static_cast<double>(k) > 0.5 + 1e-9) ++k;
  return std::min(k, ens.n_steps);
}

std::span<const double> marginal(const Ensemble& ens, double t) {
  const std::size_t k = nearest_step(ens, t);
  if (k % ens.record_stride != 0) {
    std::ostringstream os;
    os << "step " << k << " was not recorded (stride " << ens.record_stride << ")";
    throw Error(ErrorCode::out_of_range, os.str());
  }
  return ens.row(k / ens.record_stride);
}

void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& ens, std::size_t stride) {
  if (stride == 0) throw Error(ErrorCode::invalid_argument, "stride must be positive");
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string());
  os << "step,t,path,x\n";
  char buf[128];
  const std::size_t rows = ens.n_rows();
  for (std::size_t r = 0; r < rows; r += stride) {
    const std::size_t k = ens.step_of_row(r);
    const double t = ens.time_of_step(k);
    const auto xs = ens.row(r);
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
      const int n = std::snprintf(buf, sizeof buf, "%zu,%.17g,%llu,%.17g\n", k, t,
                                  static_cast<unsigned long long>(ens.path_offset + p), xs[p]);
      os.write(buf, n);
    }
  }
}

void write_ensemble_binary(const std::filesystem::path& path, const Ensemble& ens) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string());
  put_u64(os, ens.n_paths);
  put_u64(os, ens.n_rows() - 1);
  put_f64(os, ens.t0);
  put_f64(os, ens.dt * static_cast<double>(ens.record_stride));
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(ens.positions.data()),
             static_cast<std::streamsize>(ens.positions.size() * sizeof(double)));
  } else {
    for (double d : ens.positions) put_f64(os, d);
  }
}

Ensemble read_ensemble_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path.string());
  Ensemble ens;
  ens.n_paths = get_u64(is);
  ens.n_steps = get_u64(is);
  ens.t0 = std::bit_cast<double>(get_u64(is));
  ens.dt = std::bit_cast<double>(get_u64(is));
  ens.t1 = ens.t0 + static_cast<double>(ens.n_steps) * ens.dt;
  if (ens.n_paths == 0 || ens.n_paths > (std::uint64_t{1} << 40) || ens.n_steps > (std::uint64_t{1} << 32)) {
    throw Error(ErrorCode::io, "corrupt ensemble header in " + path.string());
  }
  ens.positions.resize(ens.n_paths * (ens.n_steps + 1));
  for (double& d : ens.positions) d = std::bit_cast<double>(get_u64(is));
  return ens;
}

}  // namespace nelson
