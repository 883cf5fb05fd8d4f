#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "amol/metric.hpp"
#include "amol/parametrization.hpp"

using namespace amol;

TEST_CASE("alpha_scale diagonal forms") {
  const MatD a = alpha_scale(1.0, 3.0, 3);
  for (int i = 0; i < 3; ++i) CHECK(a(i, i) == Catch::Approx(3.0));
  const MatD b = alpha_scale(0.5, 4.0, 3);
  CHECK(b(0, 0) == Catch::Approx(2.0));
  CHECK(b(1, 1) == Catch::Approx(2.0));
  CHECK(b(2, 2) == Catch::Approx(4.0));
  const MatD c = alpha_scale(0.0, 5.0, 2);
  CHECK(c(0, 0) == Catch::Approx(1.0));
  CHECK(c(1, 1) == Catch::Approx(5.0));
  CHECK_THROWS_AS(alpha_scale(0.5, -1.0, 3), std::domain_error);
}

TEST_CASE("shear matrices") {
  const MatD id = shear(VecD{0, 0}, false, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(id(i, j) == (i == j ? 1.0 : 0.0));

  const MatD s = shear(VecD{1, 2}, false, 3);
  const VecD se3 = s * VecD{0, 0, 1};
  CHECK(se3 == VecD{0, 0, 1});
  const MatD st = shear(VecD{1, 2}, true, 3);
  const VecD ste3 = st * VecD{0, 0, 1};
  CHECK(ste3 == VecD{1, 2, 1});
  // det = 1 via inverse consistency: S^{-1} = S_{-h}.
  const MatD inv = s.inverse();
  const MatD neg = shear(VecD{-1, -2}, false, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(inv(i, j) == Catch::Approx(neg(i, j)).margin(1e-14));
}

TEST_CASE("cyclic permutation") {
  const MatD z3 = cyclic_perm(3);
  CHECK(z3 * VecD{0, 0, 1} == VecD{1, 0, 0});
  CHECK(z3 * VecD{1, 0, 0} == VecD{0, 1, 0});
  const MatD z2 = cyclic_perm(2);
  CHECK(z2(0, 0) == 0.0);
  CHECK(z2(0, 1) == 1.0);
  CHECK(z2(1, 0) == 1.0);
  CHECK(z2(1, 1) == 0.0);
  // Z^d = identity exactly, and apply_cyclic matches the matrix.
  for (std::size_t d : {2u, 3u, 5u}) {
    MatD p = cyclic_perm(d);
    MatD acc = p;
    for (std::size_t k = 1; k < d; ++k) acc = acc * p;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) REQUIRE(acc(i, j) == (i == j ? 1.0 : 0.0));
    VecD v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = static_cast<double>(i + 1);
    for (int e = -3; e <= 3; ++e) {
      const VecD via_mat = cyclic_perm_pow(d, e) * v;
      REQUIRE(via_mat == apply_cyclic(v, e));
    }
  }
}

TEST_CASE("pyramid classification") {
  CHECK(pyramid_of(VecD{0, 0, 0}, 0.125) == 0);
  CHECK(pyramid_of(VecD{1, 0.5, 0.2}, 0.125) == 1);
  CHECK(pyramid_of(VecD{1, 1, 0}, 0.125) == 1);  // tie broken to smallest
  CHECK(pyramid_of(VecD{0.3, 0.9, 0.2}, 0.125) == 2);
}

TEST_CASE("sampling data validation and JSON round trip") {
  SamplingData D;
  CHECK_NOTHROW(D.validate(6));
  const auto js = D.to_json();
  const SamplingData back = SamplingData::from_json(js);
  CHECK(back.sigma == D.sigma);
  CHECK(back.tau == D.tau);

  SamplingData bad = D;
  bad.eta = [](int) { return 1.0; };  // violates eta_j ~ sigma^{-j/2}
  CHECK_THROWS(bad.validate(6));
  SamplingData bad2 = D;
  bad2.tau = {100.0, 1.0, 1.0};
  CHECK_THROWS(bad2.validate(2));
}

TEST_CASE("shearlet phase map") {
  SamplingData D;
  const double alpha = 0.5;

  // Coarse: s = 1, e = e_d, x = T k.
  const PhasePoint coarse =
      shearlet_phase(ShearletIndex{0, 0, {0, 0}, {2, -1, 3}}, D, alpha);
  CHECK(coarse.s == 1.0);
  CHECK(coarse.e == VecD{0, 0, 1});
  CHECK(coarse.x == VecD{2, -1, 3});

  // All operators identity at eps = 3, j = 0, l = 0.
  const PhasePoint triv = shearlet_phase(ShearletIndex{3, 0, {0, 0}, {0, 0, 0}}, D, alpha);
  CHECK(triv.s == 1.0);
  CHECK(triv.e == VecD{0, 0, 1});

  // Hand evaluation: eps=3, j=1, l=(2,0), sigma=4, eta_1=1/2.
  const PhasePoint hand = shearlet_phase(ShearletIndex{3, 1, {2, 0}, {0, 0, 0}}, D, alpha);
  CHECK(hand.s == Catch::Approx(4.0));
  CHECK(hand.e[0] == Catch::Approx(1.0 / std::sqrt(2.0)));
  CHECK(hand.e[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(hand.e[2] == Catch::Approx(1.0 / std::sqrt(2.0)));

  CHECK_THROWS(shearlet_phase(ShearletIndex{0, 1, {0, 0}, {0, 0, 0}}, D, alpha));
  CHECK_THROWS(shearlet_phase(ShearletIndex{5, 0, {0, 0}, {0, 0, 0}}, D, alpha));
}

TEST_CASE("shearlet phase invariants: unit direction and reconstruction") {
  SamplingData D;
  D.tau = {1.0, 0.5, 2.0};
  const double alpha = 0.5;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> jd(0, 4), ed(1, 3), kd(-9, 9);
  for (int rep = 0; rep < 500; ++rep) {
    const int j = jd(rng), eps = ed(rng);
    const auto set = D.shear_sets(eps, j);
    std::uniform_int_distribution<std::size_t> ld(0, set.size() - 1);
    const auto l = set[ld(rng)];
    const ShearletIndex idx{eps, j, {l[0], l[1]}, {kd(rng), kd(rng), kd(rng)}};
    const PhasePoint p = shearlet_phase(idx, D, alpha);
    REQUIRE(std::fabs(norm2(p.e) - 1.0) <= 1e-12);

    // Invert x = Z^eps S^{-1}_{l eta} A^{-j} Z^{-eps} T k.
    const double etaj = D.eta(j);
    const MatD A = alpha_scale(alpha, std::pow(D.sigma, j), 3);
    const MatD S = shear(VecD{etaj * l[0], etaj * l[1]}, false, 3);
    const MatD Z = cyclic_perm_pow(3, eps);
    const MatD Zi = cyclic_perm_pow(3, -eps);
    const VecD rec = Z * (A * (S * (Zi * p.x)));
    for (int i = 0; i < 3; ++i)
      REQUIRE(rec[i] == Catch::Approx(D.tau[i] * idx.k[i]).margin(1e-10));
  }
}

TEST_CASE("relabel_SH on the spec cases") {
  // Outside Delta: unchanged.
  const ShearletIndex far{2, 5, {3, 1}, {4, 5, 6}};
  CHECK(relabel_SH(far) == far);

  // Coarse at the origin: N(0,0,(0,0)) = 0, unchanged.
  const ShearletIndex coarse{0, 0, {0, 0}, {0, 0, 0}};
  CHECK(relabel_SH(coarse) == coarse);

  // (1,0,(1,1),(0,0,1)) -> (0,0,(0,0),(0,0,11+N)).
  const ShearletIndex corner{1, 0, {1, 1}, {0, 0, 1}};
  const ShearletIndex mapped = relabel_SH(corner);
  CHECK(mapped.eps == 0);
  CHECK(mapped.k[0] == 0);
  CHECK(mapped.k[1] == 0);
  // Enumeration oracle: sort Gamma lexicographically and locate (1,0,1,1).
  std::vector<std::array<int, 4>> gamma;
  gamma.push_back({0, 0, 0, 0});
  for (int e : {1, 2, 3})
    for (int s : {-1, 1}) gamma.push_back({e, 0, s, 0});
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) gamma.push_back({1, 0, s1, s2});
  std::sort(gamma.begin(), gamma.end());
  const int n_corner = static_cast<int>(
      std::find(gamma.begin(), gamma.end(), std::array<int, 4>{1, 0, 1, 1}) -
      gamma.begin());
  CHECK(mapped.k[2] == 11 * 1 + n_corner);

  CHECK_THROWS(relabel_SH(ShearletIndex{2, 0, {1, 1}, {0, 0, 0}}));  // corners live on eps=1
  CHECK_THROWS(relabel_SH(ShearletIndex{3, 1, {3, 0}, {0, 0, 0}}));  // |l1| > 2^j
}

TEST_CASE("relabel_SH is injective and partitions Delta's image mod 11") {
  // All Gamma members crossed with a small k-box, plus some non-Delta
  // indices: images must be distinct, and Delta's image third coordinates
  // must cover residues 0..10.
  std::set<std::array<int, 7>> images;
  std::set<int> residues;
  std::vector<ShearletIndex> delta;
  for (int e : {1, 2, 3})
    for (int s : {-1, 1}) delta.push_back({e, 0, {s, 0}, {0, 0, 0}});
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) delta.push_back({1, 0, {s1, s2}, {0, 0, 0}});
  delta.push_back({0, 0, {0, 0}, {0, 0, 0}});

  int count = 0;
  for (const auto& base : delta)
    for (int k3 = -2; k3 <= 2; ++k3) {
      ShearletIndex idx = base;
      idx.k = {1, -1, k3};
      const ShearletIndex m = relabel_SH(idx);
      REQUIRE(m.eps == 0);
      images.insert({m.eps, m.j, m.ell[0], m.ell[1], m.k[0], m.k[1], m.k[2]});
      residues.insert(((m.k[2] % 11) + 11) % 11);
      ++count;
    }
  CHECK(static_cast<int>(images.size()) == count);  // injective
  CHECK(residues.size() == 11);
}
