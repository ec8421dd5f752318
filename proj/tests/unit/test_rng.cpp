#include <doctest.h>

#include <cmath>
#include <vector>

#include "nelson/rng.hpp"

using namespace nelson;

TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are pure functions of their counter") {
  const CounterRng a(42), b(42), c(43);
  CHECK(a.normal_pair(Stream::increments, 7, 3) == b.normal_pair(Stream::increments, 7, 3));
  CHECK(a.normal_pair(Stream::increments, 7, 3) != c.normal_pair(Stream::increments, 7, 3));
  CHECK(a.uniform(Stream::initial, 1, 0) != a.uniform(Stream::initial, 2, 0));
  CHECK(a.raw(Stream::initial, 5, 0) != a.raw(Stream::increments, 5, 0));
  CHECK(CounterRng(0x123456789abcdefULL).seed() == 0x123456789abcdefULL);
}

TEST_CASE("uniforms stay in the open unit interval with the right moments") {
  const CounterRng r(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(Stream::initial, i, 0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(std::abs(s / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3) < 0.003);
}

TEST_CASE("normals have unit variance and uncorrelated pairs") {
  const CounterRng r(11);
  double s = 0, s2 = 0, s4 = 0, cross = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto [z0, z1] = r.normal_pair(Stream::increments, i, 0);
    s += z0 + z1;
    s2 += z0 * z0 + z1 * z1;
    s4 += z0 * z0 * z0 * z0;
    cross += z0 * z1;
  }
  CHECK(std::abs(s / (2 * n)) < 4 / std::sqrt(2.0 * n));
  CHECK(std::abs(s2 / (2 * n) - 1) < 0.015);
  CHECK(std::abs(s4 / n - 3) < 0.1);
  CHECK(std::abs(cross / n) < 4 / std::sqrt(double(n)));
}
