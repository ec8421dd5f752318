#include "nelson/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "nelson/error.hpp"

namespace nelson {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double d) {
  d = std::remainder(d, 2.0 * kPi);
  if (d <= -kPi) d += 2.0 * kPi;
  return d;
}

std::vector<Complex> laplacian(const Spectral& sp, std::span<const Complex> v) {
  return sp.derivative(v, 2);
}

}  // namespace

ComplexField::ComplexField(Grid1D g, double time, std::vector<Complex> v)
    : grid(g), t(time), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw Error(ErrorCode::invalid_argument, "field size does not match grid");
  }
}

double ComplexField::norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s * grid.dx());
}

std::vector<double> ComplexField::density() const {
  std::vector<double> rho(values.size());
  std::transform(values.begin(), values.end(), rho.begin(), [](Complex c) { return std::norm(c); });
  return rho;
}

FreePropagator::FreePropagator(const Grid1D& grid, double dt, double hbar, double m)
    : spectral_(grid), dt_(dt), phase_(grid.size()) {
  const auto& k = spectral_.wavenumbers();
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double arg = -hbar * k[j] * k[j] * dt / (2.0 * m);
    phase_[j] = {std::cos(arg), std::sin(arg)};
  }
}

ComplexField FreePropagator::apply_steps(const ComplexField& field, std::size_t n) const {
  require_same_grid(field.grid, spectral_.grid(), "propagator grid");
  auto spec = spectral_.forward(field.values);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t j = 0; j < spec.size(); ++j) spec[j] *= phase_[j];
  }
  ComplexField out(field.grid, field.t + static_cast<double>(n) * dt_, spectral_.inverse(spec));
  out.aliasing_risk = spectral_.top_octave_fraction(out.values) > kAliasingThreshold;
  return out;
}

ComplexField FreePropagator::apply(const ComplexField& field) const { return apply_steps(field, 1); }

ComplexField propagate_free(const ComplexField& field, double dt, double hbar, double m) {
  return FreePropagator(field.grid, dt, hbar, m).apply(field);
}

PolarField polar_decompose(const ComplexField& field, double hbar) {
  const std::size_t n = field.grid.size();
  PolarField p{field.grid, field.t, std::vector<double>(n), std::vector<double>(n),
               std::vector<double>(n), std::vector<std::uint8_t>(n, 0),
               std::vector<std::uint8_t>(n, 0), 0, 0};
  std::vector<double> arg(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.rho[i] = std::norm(field.values[i]);
    p.R[i] = 0.5 * std::log(std::max(p.rho[i], kRhoFloor));
    p.floor_flag[i] = p.rho[i] < kRhoFloor ? 1 : 0;
    arg[i] = std::arg(field.values[i]);
  }
  p.peak_index = static_cast<std::size_t>(
      std::distance(p.rho.begin(), std::max_element(p.rho.begin(), p.rho.end())));

  auto step = [&](std::size_t from, std::size_t to) {
    const double d = wrap_phase(arg[to] - arg[from]);
    if (std::abs(d) > 0.9 * kPi && !p.floor_flag[to] && !p.floor_flag[from]) {
      p.unwrap_flag[to] = 1;
      ++p.unwrap_ambiguities;
    }
    p.S[to] = p.S[from] + hbar * d;
  };
  p.S[p.peak_index] = hbar * arg[p.peak_index];
  for (std::size_t i = p.peak_index + 1; i < n; ++i) step(i - 1, i);
  for (std::size_t i = p.peak_index; i-- > 0;) step(i + 1, i);
  return p;
}

ComplexField reconstruct(const PolarField& polar, double hbar) {
  std::vector<Complex> v(polar.grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::exp(Complex{polar.R[i], polar.S[i] / hbar});
  }
  return ComplexField(polar.grid, polar.t, std::move(v));
}

double schrodinger_residual(std::span<const ComplexField> stencil, double hbar, double m) {
  if (stencil.size() != 3 && stencil.size() != 5) {
    throw Error(ErrorCode::invalid_argument, "stencil must hold 3 or 5 fields");
  }
  for (const auto& f : stencil) require_same_grid(f.grid, stencil[0].grid, "schrodinger_residual");
  const std::size_t c = stencil.size() / 2;
  const double delta = stencil[c + 1].t - stencil[c].t;
  for (std::size_t j = 1; j < stencil.size(); ++j) {
    const double d = stencil[j].t - stencil[j - 1].t;
    if (!(delta > 0.0) || std::abs(d - delta) > 1e-9 * std::abs(delta)) {
      throw Error(ErrorCode::invalid_argument, "stencil times must be uniformly increasing");
    }
  }
  const auto& cur = stencil[c];
  const Spectral sp(cur.grid);
  const auto lap = laplacian(sp, cur.values);
  const Complex coef{0.0, hbar / (2.0 * m)};
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cur.values.size(); ++i) {
    Complex dt;
    if (stencil.size() == 3) {
      dt = (stencil[2].values[i] - stencil[0].values[i]) / (2.0 * delta);
    } else {
      dt = (stencil[0].values[i] - 8.0 * stencil[1].values[i] + 8.0 * stencil[3].values[i] -
            stencil[4].values[i]) /
           (12.0 * delta);
    }
    num += std::norm(dt - coef * lap[i]);
    den += std::norm(cur.values[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

double schrodinger_residual(const ComplexField& prev, const ComplexField& cur,
                            const ComplexField& next, double hbar, double m) {
  const ComplexField s[] = {prev, cur, next};
  return schrodinger_residual(std::span<const ComplexField>(s), hbar, m);
}

double finite_action(std::span<const ComplexField> fields) {
  if (fields.empty()) return 0.0;
  const Spectral sp(fields[0].grid);
  std::vector<double> g(fields.size());
  for (std::size_t k = 0; k < fields.size(); ++k) {
    require_same_grid(fields[k].grid, fields[0].grid, "finite_action");
    if (k > 0 && !(fields[k].t > fields[k - 1].t)) {
      throw Error(ErrorCode::invalid_argument, "finite_action needs increasing times");
    }
    const auto d = sp.derivative(fields[k].values, 1);
    double s = 0.0;
    for (const auto& v : d) s += std::norm(v);
    g[k] = s * fields[k].grid.dx();
  }
  double total = 0.0;
  for (std::size_t k = 1; k < fields.size(); ++k) {
    total += 0.5 * (g[k] + g[k - 1]) * (fields[k].t - fields[k - 1].t);
  }
  return total;
}

ExactEvolver::ExactEvolver(const ComplexField& initial, double hbar, double m)
    : spectral_(initial.grid), t0_(initial.t), coef_(hbar / (2.0 * m)),
      spec0_(spectral_.forward(initial.values)) {}

ComplexField ExactEvolver::at(double t) const {
  const auto& k = spectral_.wavenumbers();
  auto spec = spec0_;
  const double dt = t - t0_;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double arg = -coef_ * k[j] * k[j] * dt;
    spec[j] *= Complex{std::cos(arg), std::sin(arg)};
  }
  ComplexField f(spectral_.grid(), t, spectral_.inverse(spec));
  f.aliasing_risk = spectral_.top_octave_fraction(f.values) > kAliasingThreshold;
  return f;
}

ComplexField psi_n_initial(const SlitConfig& cfg, const Grid1D& grid) {
  return sample_field(grid, 0.0, [&](double x) {
    return Complex{std::sqrt(screen_density_rho0(x, cfg)), 0.0};
  });
}

std::vector<ComplexField> build_psi_n(const SlitConfig& cfg, const Grid1D& grid,
                                      std::span<const double> times) {
  const auto psi0 = psi_n_initial(cfg, grid);
  const ExactEvolver ev(psi0, cfg.hbar, cfg.m);
  std::vector<ComplexField> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(t == 0.0 ? psi0 : ev.at(t));
  return out;
}

std::string field_filename(const std::string& label, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "_t%.6f.csv", t);
  return "field_" + label + buf;
}

void write_field_csv(const std::filesystem::path& path, const ComplexField& field, double hbar) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string());
  const auto polar = polar_decompose(field, hbar);
  os << "x,re,im,rho,S\n";
  char buf[160];
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", field.grid.x(i),
                  field.values[i].real(), field.values[i].imag(), polar.rho[i], polar.S[i]);
    os << buf;
  }
}

}  // namespace nelson
