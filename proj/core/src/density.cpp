#include "nelson/density.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nelson/error.hpp"

namespace nelson {

namespace {

constexpr std::array<double, 4> kGlX = {0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kGlW = {0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

void normalise(std::vector<double>& v, double dx) {
  const double mass = std::accumulate(v.begin(), v.end(), 0.0) * dx;
  if (!(mass > 0.0)) throw Error(ErrorCode::zero_mass, "density estimate has no mass on the grid");
  for (auto& x : v) x /= mass;
}

std::vector<double> gaussian_smooth(const std::vector<double>& v, double dx, double bw) {
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(6.0 * bw / dx));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    const double s = static_cast<double>(j) * dx / bw;
    k[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * s * s);
  }
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  std::vector<double> out(v.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (v[static_cast<std::size_t>(i)] == 0.0) continue;
    for (std::ptrdiff_t j = std::max(-half, -i); j <= std::min(half, n - 1 - i); ++j) {
      out[static_cast<std::size_t>(i + j)] +=
          v[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j + half)];
    }
  }
  return out;
}

/// Vertex of the parabola through (i-1, i, i+1).
double refine(const std::vector<double>& v, std::size_t i, const Grid1D& g) {
  if (i == 0 || i + 1 >= v.size()) return g.x(i);
  const double a = v[i - 1], b = v[i], c = v[i + 1];
  const double den = a - 2.0 * b + c;
  double off = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
  off = std::clamp(off, -0.5, 0.5);
  return g.x(i) + off * g.dx();
}

}  // namespace

DensityEstimate estimate(std::span<const double> samples, const Grid1D& grid, double bandwidth,
                         double t) {
  if (samples.size() < kMinSamples) {
    std::ostringstream os;
    os << "density estimate needs at least " << kMinSamples << " samples, got " << samples.size();
    throw Error(ErrorCode::too_few_samples, os.str());
  }
  if (!(bandwidth >= 0.0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorCode::invalid_argument, "bandwidth must be finite and nonnegative");
  }
  DensityEstimate est{grid, t, std::vector<double>(grid.size(), 0.0), samples.size(), bandwidth, 0};
  for (double x : samples) {
    const auto c = grid.cell_of(x);
    if (c < 0) {
      ++est.out_of_grid;
    } else {
      est.rho_hat[static_cast<std::size_t>(c)] += 1.0;
    }
  }
  if (bandwidth > 0.0) est.rho_hat = gaussian_smooth(est.rho_hat, grid.dx(), bandwidth);
  normalise(est.rho_hat, grid.dx());
  return est;
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  require_same_grid(a.grid, b.grid, "l1_distance");
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorCode::grid_mismatch, "l1_distance sample count mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.grid.dx();
}

double l1_distance(const DensityEstimate& est, const GridDensity& reference) {
  return l1_distance(est.as_grid_density(), reference);
}

GridDensity cell_average(const GridDensity& fine, const Grid1D& coarse) {
  const Grid1D& f = fine.grid;
  const double ratio_d = coarse.dx() / f.dx();
  const auto ratio = static_cast<std::size_t>(std::llround(ratio_d));
  const double shift_d = (coarse.x_min() - f.x_min()) / f.dx();
  const auto shift = std::llround(shift_d);
  if (ratio == 0 || std::abs(ratio_d - static_cast<double>(ratio)) > 1e-9 ||
      std::abs(shift_d - static_cast<double>(shift)) > 1e-9) {
    throw Error(ErrorCode::grid_mismatch, "coarse grid must align with the fine grid");
  }
  const auto nf = static_cast<long long>(f.size());
  auto at = [&](long long i) {
    return fine.values[static_cast<std::size_t>(((i % nf) + nf) % nf)];
  };
  GridDensity out{coarse, std::vector<double>(coarse.size())};
  const auto r = static_cast<long long>(ratio);
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    const long long centre = shift + static_cast<long long>(j) * r;
    double s = 0.0;
    if (ratio == 1) {
      s = at(centre);
    } else if (ratio % 2 == 0) {
      const long long lo = centre - r / 2;
      s = 0.5 * (at(lo) + at(lo + r));
      for (long long i = lo + 1; i < lo + r; ++i) s += at(i);
      s /= static_cast<double>(r);
    } else {
      for (long long i = centre - r / 2; i <= centre + r / 2; ++i) s += at(i);
      s /= static_cast<double>(r);
    }
    out.values[j] = s;
  }
  return out;
}

GridDensity cell_average(const std::function<double(double)>& rho, const Grid1D& grid) {
  GridDensity out{grid, std::vector<double>(grid.size())};
  const double h = 0.5 * grid.dx();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double c = grid.x(j);
    double s = 0.0;
    for (std::size_t q = 0; q < kGlX.size(); ++q) {
      s += kGlW[q] * (rho(c - h * kGlX[q]) + rho(c + h * kGlX[q]));
    }
    out.values[j] = 0.5 * s;
  }
  return out;
}

BornReport born_check(const Ensemble& ens, std::span<const double> times,
                      std::span<const ComplexField> wavefields, const Grid1D& density_grid,
                      double threshold) {
  BornReport rep;
  rep.threshold = threshold;
  rep.passed = true;
  for (double t : times) {
    const auto it = std::find_if(wavefields.begin(), wavefields.end(),
                                 [&](const ComplexField& f) { return std::abs(f.t - t) < 1e-9; });
    if (it == wavefields.end()) {
      std::ostringstream os;
      os << "no wavefield for t=" << t;
      throw Error(ErrorCode::missing_field, os.str());
    }
    const auto est = estimate(marginal(ens, t), density_grid, 0.0, t);
    const auto ref = cell_average(GridDensity{it->grid, it->density()}, density_grid);
    BornEntry e{t, l1_distance(est, ref), est.out_of_grid_fraction(), false};
    e.passed = e.l1 < threshold;
    rep.passed = rep.passed && e.passed;
    rep.entries.push_back(e);
  }
  return rep;
}

FringeReport fringe_analysis(const GridDensity& rho, std::optional<std::size_t> n_samples) {
  const auto& v = rho.values;
  const Grid1D& g = rho.grid;
  const std::size_t n = v.size();
  const double gmax = *std::max_element(v.begin(), v.end());
  double floor = kFringeProminence * gmax;
  if (n_samples && *n_samples > 0) {
    const double se = std::sqrt(gmax / (g.dx() * static_cast<double>(*n_samples)));
    floor = std::max(floor, 5.0 * se);
  }

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(v[i] > v[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && v[j + 1] == v[i]) ++j;
    if (j + 1 < n && v[j + 1] < v[i]) peaks.push_back((i + j) / 2);
    i = j;
  }
  std::vector<std::size_t> kept;
  for (std::size_t p : peaks) {
    double left_min = v[p], right_min = v[p];
    std::size_t l = p;
    while (l > 0 && v[l - 1] <= v[p]) left_min = std::min(left_min, v[--l]);
    std::size_t r = p;
    while (r + 1 < n && v[r + 1] <= v[p]) right_min = std::min(right_min, v[++r]);
    const double prominence = v[p] - std::max(left_min, right_min);
    if (prominence >= floor) kept.push_back(p);
  }
  if (kept.size() < 3) {
    std::ostringstream os;
    os << "found " << kept.size() << " fringe maxima, need at least 3";
    throw Error(ErrorCode::no_fringes, os.str());
  }

  FringeReport rep;
  std::vector<std::size_t> troughs;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    rep.maxima.push_back(refine(v, kept[k], g));
    if (k + 1 < kept.size()) {
      const auto b = v.begin();
      const auto m = static_cast<std::size_t>(
          std::min_element(b + static_cast<std::ptrdiff_t>(kept[k]),
                           b + static_cast<std::ptrdiff_t>(kept[k + 1]) + 1) -
          b);
      troughs.push_back(m);
      rep.minima.push_back(refine(v, m, g));
    }
  }

  double mass = 0.0, first = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass += v[i];
    first += v[i] * g.x(i);
  }
  const double com = first / mass;
  std::size_t centre = 0;
  for (std::size_t k = 1; k < kept.size(); ++k) {
    if (std::abs(rep.maxima[k] - com) < std::abs(rep.maxima[centre] - com)) centre = k;
  }

  auto window = [&](std::size_t width) {
    width = std::min(width, kept.size());
    std::size_t lo = centre >= width / 2 ? centre - width / 2 : 0;
    lo = std::min(lo, kept.size() - width);
    if (width % 2 == 0 && lo + width < kept.size() && lo > 0 &&
        std::abs(rep.maxima[lo + width] - com) < std::abs(rep.maxima[lo] - com)) {
      ++lo;
    }
    return lo;
  };

  const std::size_t w5 = std::min<std::size_t>(5, kept.size());
  const std::size_t s0 = window(w5);
  rep.mean_spacing = (rep.maxima[s0 + w5 - 1] - rep.maxima[s0]) / static_cast<double>(w5 - 1);

  const std::size_t v0 = window(3);
  const double vmax = (v[kept[v0]] + v[kept[v0 + 1]] + v[kept[v0 + 2]]) / 3.0;
  const double vmin = 0.5 * (v[troughs[v0]] + v[troughs[v0 + 1]]);
  rep.visibility = vmax + vmin > 0.0 ? (vmax - vmin) / (vmax + vmin) : 0.0;
  return rep;
}

FringeReport fringe_analysis(const DensityEstimate& est) {
  return fringe_analysis(est.as_grid_density(), est.n_samples - est.out_of_grid);
}

double rho0_vs_psi1_check(const SlitConfig& cfg, const Grid1D& grid) {
  cfg.validate();
  const double lam = cfg.lambda, a = cfg.a;
  const double e = std::exp(-a * a / lam);
  const double g2 = 1.0 / (2.0 * (1.0 + e));
  const double excess = -e / (2.0 * (1.0 + e));
  const double pref = 1.0 / std::sqrt(std::numbers::pi * lam);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const double pa = pref * std::exp(-(x - a) * (x - a) / lam);
    const double pb = pref * std::exp(-(x + a) * (x + a) / lam);
    const double cross = pref * std::exp(-(x * x + a * a) / lam);
    s += std::abs(excess * (pa + pb) + 2.0 * g2 * cross);
  }
  return s * grid.dx();
}

void write_density_csv(const std::filesystem::path& path, const GridDensity& rho,
                       const char* value_column) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string());
  os << "x," << value_column << "\n";
  char buf[96];
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rho.grid.x(i), rho.values[i]);
    os.write(buf, n);
  }
}

std::string fringe_report_json(const FringeReport& r) {
  nlohmann::json j;
  j["maxima"] = r.maxima;
  j["minima"] = r.minima;
  j["mean_spacing"] = r.mean_spacing;
  j["visibility"] = r.visibility;
  return j.dump(2);
}

}  // namespace nelson
