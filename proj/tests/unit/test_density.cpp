#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelson/analytic.hpp"
#include "nelson/density.hpp"
#include "nelson/diffusion.hpp"
#include "nelson/error.hpp"
#include "nelson/rng.hpp"

using namespace nelson;
using doctest::Approx;

namespace {

SlitConfig slit(double lambda, double a = 3.0) {
  SlitConfig c;
  c.lambda = lambda;
  c.a = a;
  return c;
}

const Grid1D kGrid(-40.0, 40.0, 4096);
const Grid1D kBins(-40.0, 40.0, 256);

double mass(const GridDensity& d) {
  double s = 0;
  for (double v : d.values) s += v;
  return s * d.grid.dx();
}

GridDensity sampled(const Grid1D& g, const std::function<double(double)>& f) {
  GridDensity d{g, std::vector<double>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) d.values[i] = f(g.x(i));
  return d;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<double> out;
  for (std::size_t p = 0; out.size() < n; ++p) {
    const auto z = rng.normal_pair(Stream::increments, p, 0);
    out.push_back(z[0]);
    out.push_back(z[1]);
  }
  out.resize(n);
  return out;
}

ComplexField one_slit_field(const SlitConfig& c, double t) {
  return sample_field(kGrid, t, [&](double x) { return one_slit_psi(x, t, c); });
}

}  // namespace

TEST_CASE("histogram estimate") {
  const Grid1D g(-8.0, 8.0, 256);
  const auto est = estimate(normals(1000000, 3), g);
  CHECK(est.n_samples == 1000000);
  CHECK(mass(est.as_grid_density()) == Approx(1.0).epsilon(1e-12));
  const auto ref = cell_average([](double x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); }, g);
  CHECK(l1_distance(est, ref) < 0.01);

  const auto point = estimate(std::vector<double>(2000, 0.3), g);
  int occupied = 0;
  for (double v : point.rho_hat) {
    if (v > 0) {
      ++occupied;
      CHECK(v * g.dx() == Approx(1.0));
    }
  }
  CHECK(occupied == 1);

  const auto smooth = estimate(normals(5000, 4), g, 0.2);
  CHECK(mass(smooth.as_grid_density()) == Approx(1.0).epsilon(1e-12));
  CHECK(smooth.bandwidth == 0.2);

  CHECK_THROWS_AS(estimate(std::vector<double>(999, 0.0), g), Error);
  std::vector<double> outside(2000, 0.0);
  outside[0] = 100.0;
  CHECK(estimate(outside, g).out_of_grid == 1);
}

TEST_CASE("l1 distance") {
  const Grid1D g(0.0, 1.0, 64);
  auto box = [&](double lo, double hi) {
    return sampled(g, [=](double x) { return (x >= lo && x < hi) ? 1.0 / (hi - lo) : 0.0; });
  };
  const auto a = box(0.0, 0.5), b = box(0.5, 1.0);
  CHECK(l1_distance(a, a) == 0.0);
  CHECK(l1_distance(a, b) == Approx(2.0));
  CHECK_THROWS_AS(l1_distance(a, GridDensity{Grid1D(0.0, 1.0, 128), std::vector<double>(128, 1.0)}), Error);
}

TEST_CASE("cell averages") {
  const auto fine = sampled(kGrid, [](double x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); });
  const auto coarse = cell_average(fine, kBins);
  CHECK(coarse.values.size() == kBins.size());
  CHECK(mass(coarse) == Approx(mass(fine)).epsilon(1e-12));
  const auto exact = cell_average([](double x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); }, kBins);
  CHECK(l1_distance(coarse, exact) < 1e-4);
  CHECK(cell_average(fine, kGrid).values == fine.values);
  CHECK_THROWS_AS(cell_average(fine, Grid1D(-40.0, 40.0, 8192)), Error);
}

TEST_CASE("born check on the one-slit process and a halved drift") {
  const auto c = slit(1.0);
  const std::vector<double> times{0.5, 1.0, 2.0};
  std::vector<ComplexField> fields;
  for (double t : times) fields.push_back(one_slit_field(c, t));
  const auto rho0 = one_slit_field(c, 0.0).density();
  const std::size_t n = 20000;
  const auto init = sample_initial(rho0, kGrid, n, 12);
  SimulateOptions o;
  o.record_stride = 500;
  const auto ens = simulate(DriftSpec::one_slit(c), init, 0.0, 2.0, 1e-3, 12, o);
  const auto good = born_check(ens, times, fields, kBins, 0.05);
  CHECK(good.passed);
  for (const auto& e : good.entries) CHECK(e.l1 < 0.05);

  // same process with half the drift, through a grid table
  const Grid1D tg(-40.0, 40.0, 1024);
  auto table = std::make_shared<DriftTable>(DriftTable{tg, 0.0, 1e-3, {}});
  for (int k = 0; k <= 2000; ++k) {
    std::vector<double> row(tg.size());
    for (std::size_t i = 0; i < tg.size(); ++i) row[i] = 0.5 * one_slit_drifts(tg.x(i), k * 1e-3, c).b_plus;
    table->rows.push_back(std::move(row));
  }
  const auto slow = simulate(DriftSpec::from_table(c, table), init, 0.0, 2.0, 1e-3, 12, o);
  const auto bad = born_check(slow, times, fields, kBins, 0.05);
  CHECK_FALSE(bad.passed);
  // at lambda=1, t=2 plain diffusion already has the Born variance, so the
  // damage shows at the earlier times
  CHECK_FALSE(bad.entries[0].passed);
  CHECK_FALSE(bad.entries[1].passed);

  const std::vector<double> missing{1.5};
  CHECK_THROWS_AS(born_check(ens, missing, fields, kBins, 0.05), Error);
}

TEST_CASE("fringes of the exact two-slit density") {
  const auto c = slit(0.1, 3.0);
  const auto rho5 = sampled(kGrid, [&](double x) { return two_slit_density(x, 5.0, c); });
  const auto rep = fringe_analysis(rho5);
  const double expected = std::numbers::pi * (0.01 + 25.0) / (3.0 * 5.0);
  CHECK(expected == Approx(5.2381).epsilon(1e-4));
  CHECK(std::abs(rep.mean_spacing - expected) < 0.05 * expected);
  CHECK(rep.visibility > 0.9);
  CHECK(rep.maxima.size() >= 3);
  for (std::size_t i = 1; i < rep.maxima.size(); ++i) CHECK(rep.maxima[i] > rep.maxima[i - 1]);

  const auto j = nlohmann::json::parse(fringe_report_json(rep));
  CHECK(j["mean_spacing"].get<double>() == rep.mean_spacing);

  const auto screen = sampled(kGrid, [&](double x) { return screen_density_rho0(x, c); });
  CHECK_THROWS_AS(fringe_analysis(screen), Error);
  const auto early = sampled(kGrid, [&](double x) { return two_slit_density(x, 0.1, c); });
  try {
    fringe_analysis(early);
    FAIL("expected NoFringes");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_fringes);
  }
}

TEST_CASE("fringes survive histogram noise") {
  const auto c = slit(0.1, 3.0);
  std::vector<double> d(kGrid.size());
  for (std::size_t i = 0; i < kGrid.size(); ++i) d[i] = two_slit_density(kGrid.x(i), 5.0, c);
  const auto samples = sample_initial(d, kGrid, 200000, 31);
  const auto est = estimate(samples, kBins, 0.0, 5.0);
  const auto rep = fringe_analysis(est);
  CHECK(std::abs(rep.mean_spacing - 5.2381) < 0.1 * 5.2381);
  CHECK(rep.visibility > 0.8);
}

TEST_CASE("screen density against the two-slit density at t=0") {
  CHECK(rho0_vs_psi1_check(slit(0.2, 3.0), kGrid) < 1e-15);
  const double near = rho0_vs_psi1_check(slit(1.0, 1.0), kGrid);
  CHECK(near > 1e-3);
  CHECK(near < 1.0);
  CHECK(rho0_vs_psi1_check(slit(0.1, 3.0), kGrid) < 1e-12);
}

TEST_CASE("density csv") {
  const auto dir = std::filesystem::temp_directory_path() / "nelson_density_test";
  std::filesystem::create_directories(dir);
  write_density_csv(dir / "d.csv", sampled(Grid1D(0.0, 1.0, 64), [](double x) { return x; }));
  std::ifstream is(dir / "d.csv");
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "x,rho_hat");
  CHECK(first == "0,0");
  std::filesystem::remove_all(dir);
}
