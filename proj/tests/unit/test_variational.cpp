#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nelson/analytic.hpp"
#include "nelson/error.hpp"
#include "nelson/polar_series.hpp"
#include "nelson/variational.hpp"

using namespace nelson;
using doctest::Approx;

namespace {

SlitConfig nelson_cfg() {
  SlitConfig c;
  c.lambda = 0.1;
  c.a = 3.0;
  c.T = 1.0;
  return c;
}

const Grid1D kGrid(-40.0, 40.0, 1024);

// -T, ..., 0 in increasing order, matching the slice order of GaugeFields
std::vector<double> backward_times(double T, int n) {
  std::vector<double> t;
  for (int k = n; k >= 0; --k) t.push_back(-T * k / n);
  return t;
}

LogSlice constant_slice(const Grid1D& g, double t) {
  const std::size_t n = g.size();
  return {g, t, std::vector<Complex>(n), std::vector<Complex>(n), std::vector<Complex>(n),
          std::vector<Complex>(n), std::vector<double>(n, 1.0), 0};
}

LogSlice plane_wave_slice(const Grid1D& g, double t, double k, const SlitConfig& c) {
  auto s = constant_slice(g, t);
  const Complex I{0.0, 1.0};
  const double omega = c.hbar * k * k / (2.0 * c.m);
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.l[i] = I * (k * g.x(i) - omega * t);
    s.l_x[i] = I * k;
    s.l_t[i] = -I * omega;
  }
  return s;
}

struct Pair {
  std::vector<LogSlice> ref, opt;
  GaugeFields gauge{kGrid, {}};
};

// One-slit reference shifted by T against the closed-form two-slit packet.
Pair analytic_pair(const SlitConfig& c, int n = 20, const Grid1D& grid = kGrid) {
  Pair p;
  p.gauge.grid = grid;
  for (double t : backward_times(c.T, n)) {
    p.ref.push_back(one_slit_slice(c, grid, t, c.T));
    p.opt.push_back(two_slit_slice(c, grid, t));
  }
  p.gauge = build_gauge(p.ref, p.opt, c, MaskPolicy::finite_only);
  return p;
}

}  // namespace

TEST_CASE("identical wavefunctions give the trivial gauge") {
  const auto c = nelson_cfg();
  std::vector<LogSlice> ref;
  for (double t : backward_times(c.T, 10)) ref.push_back(one_slit_slice(c, kGrid, t, c.T));
  const auto g = build_gauge(ref, ref, c);
  REQUIRE(g.slices.size() == ref.size());
  CHECK(g.slices.front().t == Approx(-c.T));
  CHECK(g.slices.back().t == 0.0);
  for (const auto& s : g.slices) {
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      if (s.mask[i]) continue;
      CHECK(s.F[i] == 0.0);
      CHECK(s.G[i] == 0.0);
      CHECK(s.lambda[i] == 0.0);
      CHECK(s.theta[i] == Complex(1.0, 0.0));
    }
  }
  CHECK(residual_eq7(g, ref, c).value() == 0.0);
  const auto rep = optimality_conditions(g, ref, c);
  CHECK(rep.v_discrepancy == 0.0);
  CHECK(rep.u_discrepancy == 0.0);
  CHECK(rep.points > 0);
}

TEST_CASE("gauge slices must start at t=0 and walk backward") {
  const auto c = nelson_cfg();
  GaugeBuilder b(c);
  const auto s0 = one_slit_slice(c, kGrid, 0.0, c.T), s1 = one_slit_slice(c, kGrid, -0.1, c.T);
  CHECK_THROWS_AS(b.next(s1, s1), Error);
  b.next(s0, s0);
  CHECK_THROWS_AS(b.next(s0, s0), Error);
  CHECK_NOTHROW(b.next(s1, s1));
  CHECK_THROWS_AS(b.next(s0, one_slit_slice(c, Grid1D(-40, 40, 512), 0.0)), Error);
}

TEST_CASE("gauge fields of the analytic pair") {
  const auto c = nelson_cfg();
  const auto p = analytic_pair(c);
  const auto& g0 = p.gauge.slices.back();
  REQUIRE(g0.t == 0.0);
  const auto& ref0 = p.ref.back();
  for (std::size_t i = 0; i < kGrid.size(); i += 7) {
    if (g0.mask[i]) continue;
    const double x = kGrid.x(i);
    const double expected = 0.5 * (std::log(two_slit_density(x, 0.0, c)) - std::log(one_slit_density(x, c.T, c)));
    if (two_slit_density(x, 0.0, c) > 1e-250 && one_slit_density(x, c.T, c) > 1e-250) {
      CHECK(g0.G[i] == Approx(expected).epsilon(1e-9));
    }
  }
  // psi_r * theta rebuilds psi* wherever both are representable
  for (std::size_t k = 0; k < p.gauge.slices.size(); k += 5) {
    const auto& g = p.gauge.slices[k];
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      const Complex psi = std::exp(p.opt[k].l[i]);
      const Complex psi_r = std::exp(p.ref[k].l[i]);
      if (g.mask[i] || std::abs(psi) < 1e-150 || std::abs(psi_r) < 1e-150) continue;
      const Complex rebuilt = psi_r * g.theta[i];
      CHECK(std::abs(rebuilt - psi) <= 1e-8 * std::abs(psi));
    }
  }
  // lambda is (hbar^2/4m) d/dx log(rho*/rho_r)
  for (std::size_t i = 0; i < kGrid.size(); i += 11) {
    if (g0.mask[i]) continue;
    const double dl = 2.0 * (p.opt.back().l_x[i].real() - ref0.l_x[i].real());
    CHECK(g0.lambda[i] == Approx(0.25 * dl).epsilon(1e-12));
  }
}

TEST_CASE("residuals vanish for the analytic pair and react to corruption") {
  const auto c = nelson_cfg();
  auto p = analytic_pair(c);
  const double e2 = residual_eq2(p.gauge, p.ref, c).value();
  const double e5 = residual_eq5(p.gauge, p.ref, c).value();
  const double e7 = residual_eq7(p.gauge, p.ref, c).value();
  const double ps = residual_product_schrodinger(p.gauge, p.ref, c).value();
  CHECK(e2 < 1e-8);
  CHECK(e5 < 1e-8);
  CHECK(e7 < 1e-8);
  CHECK(ps < 1e-8);
  CHECK(fokker_planck_residual(p.opt, c).value() < 1e-8);
  CHECK(fokker_planck_residual(p.ref, c).value() < 1e-8);
  CHECK(residual_eq5_flipped(p.gauge, p.ref, c).value() > 1.0);

  auto bent = p.gauge;
  for (auto& s : bent.slices)
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      const double x = kGrid.x(i);
      s.F[i] += 0.01 * x * x;
      s.d_x[i] += Complex(0.0, 0.02 * x / c.hbar);
      s.d_xx[i] += Complex(0.0, 0.02 / c.hbar);
    }
  const double bent2 = residual_eq2(bent, p.ref, c).value();
  CHECK(bent2 >= 10.0 * e2);
  CHECK(bent2 > 1e-3);

  auto wavy = p.gauge;
  for (auto& s : wavy.slices)
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      const double x = kGrid.x(i);
      s.G[i] += 0.01 * std::sin(x);
      s.d_x[i] += 0.01 * std::cos(x);
      s.d_xx[i] -= 0.01 * std::sin(x);
    }
  const double wavy5 = residual_eq5(wavy, p.ref, c).value();
  CHECK(wavy5 >= 10.0 * e5);
  CHECK(wavy5 > 1e-3);
}

TEST_CASE("with a flat reference the gauge equations are the Madelung equations") {
  SlitConfig c;
  const auto times = backward_times(1.0, 10);
  for (double k : {0.7, -1.3}) {
    std::vector<LogSlice> ref, opt;
    for (double t : times) {
      ref.push_back(constant_slice(kGrid, t));
      opt.push_back(plane_wave_slice(kGrid, t, k, c));
    }
    const auto g = build_gauge(ref, opt, c);
    CHECK(residual_eq2(g, ref, c).value() < 1e-6);
    CHECK(residual_eq5(g, ref, c).value() < 1e-6);
    CHECK(residual_eq7(g, ref, c).value() < 1e-6);
  }
  // a spreading packet has non-trivial amplitude and phase
  SlitConfig w;
  w.lambda = 1.0;
  std::vector<LogSlice> ref, opt;
  for (double t : times) {
    ref.push_back(constant_slice(kGrid, t));
    opt.push_back(one_slit_slice(w, kGrid, t, 2.0));
  }
  const auto g = build_gauge(ref, opt, w);
  CHECK(residual_eq2(g, ref, w).value() < 1e-6);
  CHECK(residual_eq5(g, ref, w).value() < 1e-6);
}

TEST_CASE("optimality identities and the unwrap diagnostic") {
  const auto c = nelson_cfg();
  const Grid1D fine(-40.0, 40.0, 4096);
  auto p = analytic_pair(c, 10, fine);
  const auto rep = optimality_conditions(p.gauge, p.ref, c);
  CAPTURE(rep.unwrap_discrepancy);
  CHECK(rep.v_discrepancy < 1e-8);
  CHECK(rep.u_discrepancy < 1e-8);
  CHECK_FALSE(rep.unwrap_flagged);

  auto broken = p.gauge.slices.back();
  const std::size_t mid = fine.size() / 2 + 40;
  for (std::size_t i = mid; i < fine.size(); ++i) broken.F_spatial[i] += 1.0;
  const auto bad = optimality_conditions(broken, p.ref.back(), c);
  CHECK(bad.unwrap_flagged);
  CHECK(bad.unwrap_discrepancy > kUnwrapTolerance);
}

TEST_CASE("masked mass above the limit is refused") {
  const auto c = nelson_cfg();
  auto p = analytic_pair(c, 4);
  for (auto& s : p.gauge.slices) s.masked_fraction = 0.25;
  CHECK_THROWS_AS(residual_eq2(p.gauge, p.ref, c), Error);
  try {
    residual_eq7(p.gauge, p.ref, c);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::mask_too_large);
  }
}

TEST_CASE("Monte-Carlo summaries") {
  PathContributions plain{{1.0, 2.0, 3.0, 4.0}, {0.0, 0.0, 0.0, 0.0}};
  const auto m = summarize(plain, false);
  CHECK(m.value == Approx(2.5));
  CHECK(m.std_error == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.n_paths == 4);

  PathContributions cv;
  for (int i = 0; i < 4000; ++i) {
    const double c = std::sin(1.7 * i);
    cv.control.push_back(c);
    cv.value.push_back(3.0 + 2.0 * c + 0.01 * std::cos(0.3 * i * i));
  }
  const auto with = summarize(cv, true), without = summarize(cv, false);
  CHECK(with.beta == Approx(2.0).epsilon(0.01));
  CHECK(with.std_error < 0.1 * without.std_error);
  CHECK(std::abs(with.value - 3.0) < 4 * with.std_error + 1e-3);

  PathContributions holes{{1.0, NAN, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0}, std::vector<double>(10, 0.0)};
  const auto h = summarize(holes, false);
  CHECK(h.masked_fraction == Approx(0.1));
  CHECK(h.n_paths == 9);
  holes.value[2] = holes.value[3] = NAN;
  CHECK_THROWS_AS(summarize(holes, false), Error);
}

namespace {

TimeTable constant_table(const Grid1D& g, double t0, double dt, std::size_t rows,
                         const std::function<double(double)>& f) {
  TimeTable t{g, t0, dt, {}};
  std::vector<double> row(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) row[i] = f(g.x(i));
  t.rows.assign(rows, row);
  return t;
}

PathSamples straight_paths(std::size_t n_paths, std::size_t n_steps, double dt, double speed) {
  PathSamples s{n_paths, n_steps, -1.0, dt, {}, {}, {}};
  for (std::size_t k = 0; k <= n_steps; ++k)
    for (std::size_t p = 0; p < n_paths; ++p) {
      s.x.push_back(-1.0 + 0.1 * p + speed * dt * k);
      s.v.push_back(0.0);
      s.u.push_back(0.0);
    }
  return s;
}

}  // namespace

TEST_CASE("Lambda follows F along paths modulo 2 pi hbar") {
  SlitConfig c;
  const Grid1D g(-4.0, 4.0, 256);
  const std::size_t N = 100;
  const double dt = 0.01;
  const auto s = straight_paths(20, N, dt, 2.0);
  GaugeTables tables{constant_table(g, -1.0, dt, N + 1, [](double x) { return x; }),
                     constant_table(g, -1.0, dt, N + 1, [](double) { return 0.0; }),
                     constant_table(g, -1.0, dt, N + 1, [](double) { return 1.0; }),
                     constant_table(g, -1.0, dt, N + 1, [](double) { return 0.0; }),
                     constant_table(g, -1.0, dt, N + 1, [](double) { return 0.0; })};
  const auto a = lambda_contributions(s, tables, c);
  for (double y : a.value) CHECK(y == Approx(2.0).epsilon(1e-10));

  // the same F stored on a different branch at every few cells
  auto branchy = tables;
  for (auto& row : branchy.F.rows)
    for (std::size_t i = 0; i < g.size(); ++i) row[i] += 2.0 * std::numbers::pi * static_cast<double>((i / 5) % 3);
  const auto b = lambda_contributions(s, branchy, c);
  for (std::size_t p = 0; p < a.value.size(); ++p) CHECK(b.value[p] == Approx(a.value[p]).epsilon(1e-9));

  PathSamples late = s;
  late.t0 = -0.5;
  CHECK_THROWS_AS(lambda_contributions(late, tables, c), Error);
}

TEST_CASE("action integrand scales with the mass") {
  SlitConfig c;
  const Grid1D g(-4.0, 4.0, 256);
  const std::size_t N = 100;
  const double dt = 0.01;
  auto s = straight_paths(10, N, dt, 0.0);
  for (auto& v : s.v) v = 1.0;
  auto zero = [](double) { return 0.0; };
  ReferenceTables r{constant_table(g, -1.0, dt, N + 1, zero), constant_table(g, -1.0, dt, N + 1, zero),
                    std::vector<double>(g.size(), 0.0)};
  const double i1 = action_I(s, r, c).value;
  c.m = 2.0;
  const double i2 = action_I(s, r, c).value;
  CHECK(i1 == Approx(0.5));
  CHECK(i2 == Approx(2.0 * i1));
}

TEST_CASE("saddle ordering of the pointwise integrand") {
  CHECK(bump(0.0, 0.0, 1.0) == Approx(1.0));
  CHECK(bump(1.0, 0.0, 1.0) == 0.0);
  CHECK(bump(0.5, 0.0, 1.0) == Approx(bump(-0.5, 0.0, 1.0)));

  SlitConfig c;
  const Grid1D g(-4.0, 4.0, 256);
  const std::size_t N = 10;
  const double dt = 0.01;
  auto f = [&](auto fn) { return constant_table(g, -1.0, dt, N + 1, fn); };
  GaugeTables gt{f([](double) { return 0.0; }), f([](double) { return 0.0; }), f([](double) { return 0.5; }),
                 f([](double) { return 0.1; }), f([](double) { return 0.0; })};
  ReferenceTables rt{f([](double x) { return x; }), f([](double x) { return -x; }), std::vector<double>(g.size())};
  auto s = straight_paths(30, N, dt, 0.0);
  for (std::size_t j = 0; j < s.x.size(); ++j) {
    s.v[j] = (s.x[j] + 0.5) / c.m;
    s.u[j] = -s.x[j] + 4.0 * c.m * 0.1 / (c.hbar * c.hbar);
  }
  const std::vector<double> eps{-0.1, -0.05, 0.0, 0.05, 0.1};
  const auto good = saddle_spot_check(s, gt, rt, c, eps, 0.0, 3.0, 1);
  CHECK(good.points == 30 * (N + 1));
  CHECK(good.v_violations == 0);
  CHECK(good.u_violations == 0);
  CHECK(good.max_quadratic_error < 1e-12);

  for (auto& v : s.v) v += 1.0;
  const auto off = saddle_spot_check(s, gt, rt, c, eps, 0.0, 3.0, 1);
  CHECK(off.v_violations > 0);
  CHECK_THROWS_AS(saddle_spot_check(s, gt, rt, c, eps, 0.0, 3.0, 0), Error);
}
