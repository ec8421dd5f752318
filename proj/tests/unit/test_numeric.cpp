#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nelson/error.hpp"
#include "nelson/numeric.hpp"

using namespace nelson;
using doctest::Approx;

TEST_CASE("pairwise sum") {
  std::vector<double> v(1001, 0.1);
  CHECK(pairwise_sum(v) == Approx(100.1).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  std::vector<double> w{1e16, 1.0, -1e16, 1.0};
  CHECK(std::isfinite(pairwise_sum(w)));
}

TEST_CASE("parallel_for visits each index once and rethrows") {
  for (unsigned th : {1u, 3u, 0u}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), th, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  CHECK(resolve_threads(3) == 3u);
  CHECK(resolve_threads(0) >= 1u);
}

TEST_CASE("cubic interpolation") {
  const Grid1D g(-2.0, 2.0, 64);
  std::vector<double> lin(g.size()), quad(g.size()), sn(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    lin[i] = 3 * g.x(i) - 1;
    quad[i] = g.x(i) * g.x(i);
    sn[i] = std::sin(g.x(i));
  }
  const CubicInterpolator f(g, lin), q(g, quad), s(g, sn);
  for (double x : {-1.93, -0.55, 0.0, 0.123, 1.5}) {
    CHECK(f(x) == Approx(3 * x - 1).epsilon(1e-13));
    CHECK(q(x) == Approx(x * x).epsilon(1e-12));
    CHECK(std::abs(s(x) - std::sin(x)) < 1e-4);
    CHECK(cubic_at(g, sn, x) == s(x));
  }
  CHECK(s(g.x(7)) == Approx(sn[7]).epsilon(1e-15));
  CHECK(f(g.x(g.size() - 1)) == Approx(lin.back()));
  CHECK_THROWS_AS(f(1.99), Error);
  CHECK_FALSE(f.contains(-2.5));
}

TEST_CASE("periodic stencil ignores branch jumps") {
  const Grid1D g(0.0, 1.0, 64);
  const double P = 2 * 3.141592653589793;
  std::vector<double> smooth(g.size()), jumped(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    smooth[i] = 0.3 * g.x(i);
    jumped[i] = smooth[i] + (i >= 30 ? P : 0.0) + (i >= 45 ? -2 * P : 0.0);
  }
  for (double x : {0.44, 0.47, 0.48, 0.71, 0.9}) {
    const auto w = cubic_weights(g, x);
    const double a = w.apply(smooth), b = w.apply_periodic(jumped, P);
    CHECK(std::remainder(a - b, P) == Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("time table rows") {
  TimeTable t{Grid1D(0, 1, 64), -1.0, 0.25, std::vector<std::vector<double>>(5)};
  CHECK(t.t_end() == Approx(0.0));
  CHECK(t.row_index(-0.5) == 2);
  CHECK_THROWS_AS(t.row_index(-0.6), Error);
  CHECK_THROWS_AS(t.row_index(0.25), Error);
}
