#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "amol/windows.hpp"

using namespace amol;

TEST_CASE("smooth_step endpoints, midpoint and symmetry") {
  for (const ProfileParams prof : {ProfileParams{0, 1.0 / 16}, ProfileParams{4, 1.0 / 16}}) {
    CHECK(smooth_step(-1.0, prof) == 0.0);
    CHECK(smooth_step(2.0, prof) == 1.0);
    CHECK(smooth_step(0.5, prof) == Catch::Approx(0.5).margin(1e-14));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double t = i / 100.0;
      const double b = smooth_step(t, prof);
      REQUIRE(b >= prev);  // nondecreasing on the closed interval
      prev = b;
      REQUIRE(smooth_step(t, prof) + smooth_step(1.0 - t, prof) ==
              Catch::Approx(1.0).margin(1e-13));
    }
  }
}

TEST_CASE("bump_v values and the three-term partition") {
  CHECK(bump_v(0.0) == 1.0);
  CHECK(bump_v(1.0) == 0.0);
  CHECK(bump_v(-1.0) == 0.0);
  const double t = 0.3;
  const double s = bump_v(t - 1) * bump_v(t - 1) + bump_v(t) * bump_v(t) +
                   bump_v(t + 1) * bump_v(t + 1);
  CHECK(s == Catch::Approx(1.0).margin(1e-12));
  // Flat plateau around zero.
  CHECK(bump_v(1.0 / 32) == 1.0);
  CHECK(bump_v(-1.0 / 32) == 1.0);
}

TEST_CASE("shift partition sum_l v(u-l)^2 = 1 for 1000 sampled u") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = u(rng);
    double s = 0.0;
    for (int l = -5; l <= 5; ++l) s += bump_v(x - l) * bump_v(x - l);
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("meyer_phi_hat profile") {
  CHECK(meyer_phi_hat(0.0) == 1.0);
  CHECK(meyer_phi_hat(1.0 / 16) == 1.0);
  CHECK(meyer_phi_hat(1.0 / 8) == 0.0);
  const double mid = meyer_phi_hat(3.0 / 32);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  // Even and monotone nonincreasing in |t|.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    REQUIRE(meyer_phi_hat(t) == meyer_phi_hat(-t));
  }
  double prev = 1.0;
  for (int i = 0; i <= 400; ++i) {
    const double v = meyer_phi_hat(i * 0.2 / 400);
    REQUIRE(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("Phi_hat, W and V pointwise values") {
  CHECK(Phi_hat(VecD{0, 0, 0}) == 1.0);
  CHECK(W_window(VecD{0, 0, 0}) == 0.0);
  CHECK(W_window(VecD{0.2, 0, 0}) == Catch::Approx(1.0).margin(1e-15));
  CHECK(V_window(VecD{0.3, 0, 1}) == Catch::Approx(bump_v(0.3)));
  CHECK(V_window(VecD{1.5, 0, 1}) == 0.0);
  CHECK(V_window(VecD{0.3, 0.2, 0}) == 0.0);  // extended by zero off xi_3 != 0
  CHECK(W_window(VecD{0.2, 0.1, 0.05}) >= 0.0);
}

TEST_CASE("finite telescoping identity on a 64^3 grid for J = 3") {
  const int n = 64, J = 3;
  double worst = 0.0;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) {
        const VecD xi{-2.0 + 4.0 * i0 / n, -2.0 + 4.0 * i1 / n, -2.0 + 4.0 * i2 / n};
        const double p0 = Phi_hat(xi);
        double lhs = p0 * p0;
        for (int j = 0; j <= J; ++j) {
          const VecD s{std::ldexp(xi[0], -2 * j), std::ldexp(xi[1], -2 * j),
                       std::ldexp(xi[2], -2 * j)};
          const double w = W_window(s);
          lhs += w * w;
        }
        const VecD t{std::ldexp(xi[0], -2 * (J + 1)), std::ldexp(xi[1], -2 * (J + 1)),
                     std::ldexp(xi[2], -2 * (J + 1))};
        const double rhs = Phi_hat(t) * Phi_hat(t);
        worst = std::max(worst, std::fabs(lhs - rhs));
      }
  CHECK(worst <= 1e-12);
}

TEST_CASE("windows are even per coordinate and bounded") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 2000; ++i) {
    VecD xi{u(rng), u(rng), u(rng)};
    const double p = Phi_hat(xi);
    REQUIRE(p >= 0.0);
    REQUIRE(p <= 1.0);
    for (int ax = 0; ax < 3; ++ax) {
      VecD flip = xi;
      flip[ax] = -flip[ax];
      REQUIRE(Phi_hat(flip) == p);
      REQUIRE(W_window(flip) == W_window(xi));
    }
  }
}

TEST_CASE("partition identities hold for a non-default plateau too") {
  const ProfileParams prof{0, 1.0 / 8.0};
  for (double x : {-0.7, -0.2, 0.05, 0.44, 0.9}) {
    double s = 0.0;
    for (int l = -4; l <= 4; ++l) s += bump_v(x - l, prof) * bump_v(x - l, prof);
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
}
