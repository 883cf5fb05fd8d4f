#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "amol/geometry.hpp"

using namespace amol;

namespace {

VecD random_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  VecD v(d);
  double n = 0.0;
  do {
    for (auto& c : v) c = g(rng);
    n = norm2(v);
  } while (n < 1e-6);
  for (auto& c : v) c /= n;
  return v;
}

}  // namespace

TEST_CASE("direction_from_angles matches the component formula") {
  // theta = 0 forces e_d regardless of phi.
  for (double phi : {0.0, 1.0, 5.0}) {
    const Direction e = direction_from_angles(AngleSet{{0.0}, phi}, 3);
    CHECK(e.coords[2] == Catch::Approx(1.0).margin(1e-15));
  }
  // Hand evaluations of eta_1 = cos(phi) sin(theta_1), etc.
  const Direction e1 = direction_from_angles(AngleSet{{pi / 2}, 0.0}, 3);
  CHECK(e1.coords[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(std::fabs(e1.coords[1]) < 1e-12);
  CHECK(std::fabs(e1.coords[2]) < 1e-12);
  const Direction e2 = direction_from_angles(AngleSet{{pi / 2}, pi / 2}, 3);
  CHECK(e2.coords[1] == Catch::Approx(1.0).margin(1e-12));

  CHECK_THROWS(direction_from_angles(AngleSet{{}, 0.0}, 1));
}

TEST_CASE("direction_from_angles is unit norm in higher dimensions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t d : {2u, 3u, 4u, 5u, 6u}) {
    for (int rep = 0; rep < 200; ++rep) {
      VecD theta(d >= 2 ? d - 2 : 0);
      if (!theta.empty()) {
        theta[0] = pi * u(rng);
        for (std::size_t i = 1; i < theta.size(); ++i) theta[i] = pi * (u(rng) - 0.5) / 1.0001;
      }
      const double phi = 2 * pi * u(rng) * 0.9999;
      const Direction e = direction_from_angles(AngleSet{theta, phi}, d);
      CHECK(std::fabs(norm2(e.coords) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("angles_from_direction inverts the parametrization") {
  // Pole convention.
  const AngleSet pole = angles_from_direction(Direction(VecD{0, 0, 1}));
  CHECK(pole.theta[0] == 0.0);
  CHECK(pole.phi == 0.0);
  // Hand case: (1,0,0) -> theta = pi/2, phi = 0.
  const AngleSet a = angles_from_direction(Direction(VecD{1, 0, 0}));
  CHECK(a.theta[0] == Catch::Approx(pi / 2).margin(1e-12));
  CHECK(a.phi == Catch::Approx(0.0).margin(1e-12));

  std::mt19937_64 rng(11);
  for (std::size_t d : {2u, 3u, 4u, 5u}) {
    for (int rep = 0; rep < 1000; ++rep) {
      const VecD v = random_unit(rng, d);
      const AngleSet ang = angles_from_direction(Direction(v));
      const Direction back = direction_from_angles(ang, d);
      for (std::size_t i = 0; i < d; ++i)
        REQUIRE(back.coords[i] == Catch::Approx(v[i]).margin(1e-10));
    }
  }
}

TEST_CASE("sphere_distance basics") {
  const Direction v(VecD{0, 0, 1});
  CHECK(sphere_distance(v, v) == 0.0);
  CHECK(sphere_distance(Direction(VecD{1, 0, 0}), Direction(VecD{0, 1, 0})) ==
        Catch::Approx(pi / 2));
  CHECK(sphere_distance(v, Direction(VecD{0, 0, -1})) == Catch::Approx(pi));
  CHECK_THROWS(sphere_distance(v, Direction(VecD{1, 0})));
}

TEST_CASE("project_angle range, periodicity and idempotence") {
  CHECK(project_angle(0.0) == 0.0);
  CHECK(project_angle(pi) == Catch::Approx(0.0).margin(1e-15));
  CHECK(project_angle(3 * pi / 4) == Catch::Approx(-pi / 4));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 10000; ++i) {
    const double t = u(rng);
    const double p = project_angle(t);
    REQUIRE(p >= -pi / 2);
    REQUIRE(p < pi / 2);
    REQUIRE(std::fabs(std::remainder(p - t, pi)) < 1e-9);
    REQUIRE(project_angle(p) == p);  // idempotent
    REQUIRE(project_angle(t + pi) == Catch::Approx(p).margin(1e-9));
  }
}

TEST_CASE("gnomonic projection") {
  CHECK(gnomonic(VecD{0, 0, 1}) == VecD{0, 0, 1});
  CHECK(gnomonic(VecD{1, 0, 2}) == VecD{0.5, 0, 1});
  CHECK(gnomonic(VecD{0, 3, -3}) == VecD{-0, -1, 1});
  CHECK_THROWS_AS(gnomonic(VecD{1, 2, 0}), std::domain_error);
}

TEST_CASE("projected angle is equivalent to |sin| on [-pi/2, pi/2)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-pi / 2, std::nextafter(pi / 2, 0.0));
  for (int i = 0; i < 10000; ++i) {
    const double t = u(rng);
    REQUIRE((2.0 / pi) * std::fabs(t) <= std::fabs(std::sin(t)) + 1e-15);
    REQUIRE(std::fabs(std::sin(t)) <= std::fabs(t) + 1e-15);
  }
}

TEST_CASE("gnomonic projection is bi-Lipschitz on the cap [x]_d >= 0.3") {
  std::mt19937_64 rng(13);
  const double c = 0.3, kappa = 20.0;
  int used = 0;
  while (used < 10000) {
    VecD v = random_unit(rng, 3);
    VecD w = random_unit(rng, 3);
    if (v[2] < c || w[2] < c) continue;
    const VecD dv = v - w;
    const double dist = norm2(dv);
    if (dist < 1e-9) continue;
    const double pd = norm2(gnomonic(v) - gnomonic(w));
    const double ratio = pd / dist;
    REQUIRE(ratio >= 1.0 / kappa);
    REQUIRE(ratio <= kappa);
    ++used;
  }
}
