#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "amol/metric.hpp"

using namespace amol;

namespace {

PhasePoint random_phase(std::mt19937_64& rng, double smax = 64.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double s = std::exp(u(rng) * std::log(smax));
  VecD e(3);
  double n = 0.0;
  do {
    for (auto& c : e) c = g(rng);
    n = norm2(e);
  } while (n < 1e-6);
  for (auto& c : e) c /= n;
  VecD x{8 * (u(rng) - 0.5), 8 * (u(rng) - 0.5), 8 * (u(rng) - 0.5)};
  return PhasePoint(s, e, x);
}

}  // namespace

TEST_CASE("d_alpha hand values") {
  const PhasePoint p(1.0, VecD{0, 0, 1}, VecD{0, 0, 0});
  CHECK(d_alpha(p, p, 0.5) == 0.0);

  const PhasePoint q(1.0, VecD{0, 0, 1}, VecD{-1, 0, 0});
  // |dx|^2 = 1, angle 0, <e_3, dx> = 0.
  CHECK(d_alpha(p, q, 0.5) == Catch::Approx(1.0));

  const PhasePoint r(1.0, VecD{1, 0, 0}, VecD{0, 0, 0});
  // Angle pi/2 projects to -pi/2; squared = pi^2/4.
  CHECK(d_alpha(p, r, 0.5) == Catch::Approx(pi * pi / 4));
}

TEST_CASE("omega_alpha hand values and identity") {
  const PhasePoint p(1.0, VecD{0, 0, 1}, VecD{0, 0, 0});
  CHECK(omega_alpha(p, p, 0.5) == 1.0);
  const PhasePoint q(1.0, VecD{0, 0, 1}, VecD{-1, 0, 0});
  CHECK(omega_alpha(p, q, 0.5) == Catch::Approx(2.0));
  const PhasePoint hi(4.0, VecD{0, 0, 1}, VecD{0, 0, 0});
  CHECK(omega_alpha(hi, p, 0.5) == Catch::Approx(4.0));

  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const PhasePoint a = random_phase(rng);
    REQUIRE(omega_alpha(a, a, 0.5) == 1.0);
    REQUIRE(omega_alpha(a, a, 0.0) == 1.0);
  }
}

TEST_CASE("quasi-symmetry factor stays below 4") {
  std::mt19937_64 rng(29);
  double worst = 0.0;
  for (double alpha : {0.0, 0.5, 1.0})
    for (int i = 0; i < 20000; ++i) {
      const PhasePoint a = random_phase(rng);
      const PhasePoint b = random_phase(rng);
      const double r = omega_alpha(a, b, alpha) / omega_alpha(b, a, alpha);
      worst = std::max(worst, std::max(r, 1.0 / r));
    }
  CHECK(worst <= 4.0);
  CHECK(worst > 1.0);
}

TEST_CASE("pseudo-triangle constant is finite and modest") {
  std::mt19937_64 rng(31);
  double c_tri = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PhasePoint a = random_phase(rng);
    const PhasePoint b = random_phase(rng);
    const PhasePoint c = random_phase(rng);
    const double lhs = omega_alpha(a, b, 0.5);
    const double rhs = omega_alpha(a, c, 0.5) * omega_alpha(c, b, 0.5);
    c_tri = std::max(c_tri, lhs / rhs);
  }
  INFO("measured pseudo-triangle constant " << c_tri);
  CHECK(c_tri <= 1e3);
}

TEST_CASE("schur_lp_bound hand values") {
  const std::vector<SchurEntry> id{{0, 0, 1.0}, {1, 1, 1.0}};
  CHECK(schur_lp_bound(id, 1.0) == Catch::Approx(1.0));

  const std::vector<SchurEntry> ones{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  CHECK(schur_lp_bound(ones, 1.0) == Catch::Approx(2.0));

  const std::vector<SchurEntry> diag{{0, 0, 2.0}, {1, 1, 3.0}};
  CHECK(schur_lp_bound(diag, 0.5) == Catch::Approx(3.0));

  CHECK_THROWS_AS(schur_lp_bound(id, 0.0), std::domain_error);
}

TEST_CASE("schur bound dominates the measured lp operator norm") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double p : {1.0, 0.5}) {
    const int n = 8;
    std::vector<SchurEntry> entries;
    std::vector<std::vector<double>> A(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        A[i][j] = u(rng);
        entries.push_back({i, j, A[i][j]});
      }
    const double bound = schur_lp_bound(entries, p);
    double measured = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x(n);
      double nx = 0.0;
      for (auto& c : x) {
        c = u(rng);
        nx += std::pow(std::fabs(c), p);
      }
      nx = std::pow(nx, 1.0 / p);
      double ny = 0.0;
      for (int i = 0; i < n; ++i) {
        double yi = 0.0;
        for (int j = 0; j < n; ++j) yi += A[i][j] * x[j];
        ny += std::pow(std::fabs(yi), p);
      }
      ny = std::pow(ny, 1.0 / p);
      measured = std::max(measured, ny / nx);
    }
    REQUIRE(measured <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("consistency of a single index is exactly 1") {
  const PhasePoint p(1.0, VecD{0, 0, 1}, VecD{0.5, 0, 0});
  CHECK(consistency_sum_points({p}, {p}, 0.5, 4.0) == Catch::Approx(1.0));
  CHECK_THROWS(consistency_sum_points({}, {p}, 0.5, 4.0));
}

TEST_CASE("pruned consistency sum matches the brute-force oracle") {
  SamplingData A;  // tau = 1
  SamplingData B;
  B.tau = {0.25, 0.25, 0.25};
  const double alpha = 0.5;

  // Oracle: enumerate all lambda with j <= 2, |k|inf <= 2 explicitly.
  std::vector<PhasePoint> lambdas;
  for (int k1 = -2; k1 <= 2; ++k1)
    for (int k2 = -2; k2 <= 2; ++k2)
      for (int k3 = -2; k3 <= 2; ++k3)
        lambdas.push_back(
            shearlet_phase(ShearletIndex{0, 0, {0, 0}, {k1, k2, k3}}, A, alpha));
  for (int j = 0; j <= 2; ++j)
    for (int eps = 1; eps <= 3; ++eps)
      for (const auto& l : A.shear_sets(eps, j))
        for (int k1 = -2; k1 <= 2; ++k1)
          for (int k2 = -2; k2 <= 2; ++k2)
            for (int k3 = -2; k3 <= 2; ++k3)
              lambdas.push_back(shearlet_phase(
                  ShearletIndex{eps, j, {l[0], l[1]}, {k1, k2, k3}}, A, alpha));

  const auto probes = amol::detail::stratified_probes(B, 2, 2, 64);
  std::vector<PhasePoint> mus;
  for (const auto& idx : probes) mus.push_back(shearlet_phase(idx, B, alpha));

  for (double k : {4.0, 1.0}) {
    const double oracle = consistency_sum_points(lambdas, mus, alpha, k);
    double pruned = 0.0;
    for (const auto& mu : mus)
      pruned = std::max(pruned, amol::detail::probe_sum_sh3(A, alpha, k, mu, 2, 2));
    REQUIRE(pruned == Catch::Approx(oracle).epsilon(2e-3));
  }
}

TEST_CASE("consistency report shape and convergence flags at small scale") {
  SamplingData A;
  SamplingData B;
  B.tau = {0.25, 0.25, 0.25};

  const ConsistencyReport conv = consistency_sum(A, B, 0.5, 4.0, {4, 8, 16});
  CHECK(conv.increments.size() == 4);  // (1,1),(2,2),(3,4),(4,8)
  CHECK(conv.sup_estimate == conv.increments.back());
  CHECK(conv.converged);
  const auto js = conv.to_json();
  CHECK(js.at("k").get<double>() == 4.0);

  const ConsistencyReport div = consistency_sum(A, B, 0.5, 1.0, {4, 8, 16});
  CHECK_FALSE(div.converged);
  // Divergence shows as growing level differences.
  const auto& inc = div.increments;
  const std::size_t L = inc.size();
  CHECK(inc[L - 1] - inc[L - 2] > inc[L - 2] - inc[L - 3]);

  CHECK_THROWS(consistency_sum(A, B, 0.5, 0.0, {4, 8, 16}));
  CHECK_THROWS(consistency_sum(A, B, 0.5, 4.0, {0, 8, 16}));
}
