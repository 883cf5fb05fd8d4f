#pragma once

// The phase space P_d = R_+ x S^{d-1} x R^d, the scaling / shearing / cyclic
// permutation operators, pyramid classification, sampling data D, the
// shearlet parametrization Phi^s and the SH relabeling F_label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <array>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "amol/core.hpp"
#include "amol/geometry.hpp"
#include "json.hpp"

namespace amol {

/// A point (s, e, x) of P_d.
struct PhasePoint {
  double s = 1.0;
  VecD e;
  VecD x;

  PhasePoint() = default;
  PhasePoint(double scale, VecD dir, VecD loc)
      : s(scale), e(std::move(dir)), x(std::move(loc)) {
    if (s <= 0.0) throw std::invalid_argument("PhasePoint: scale must be positive");
    if (e.size() != x.size() || e.size() < 2)
      throw std::invalid_argument("PhasePoint: inconsistent dimensions");
    if (std::fabs(norm2(e) - 1.0) > 1e-12)
      throw std::invalid_argument("PhasePoint: direction not unit");
  }

  std::size_t dim() const { return e.size(); }
};

/// Shearlet index (epsilon, j, l, k); epsilon = 0 is the coarse box and
/// forces j = 0, l = 0.
struct ShearletIndex {
  int eps = 0;
  int j = 0;
  std::vector<int> ell;  // length d-1
  std::vector<int> k;    // length d

  std::size_t dim() const { return k.size(); }

  friend bool operator==(const ShearletIndex& a, const ShearletIndex& b) {
    return a.eps == b.eps && a.j == b.j && a.ell == b.ell && a.k == b.k;
  }
  friend bool operator<(const ShearletIndex& a, const ShearletIndex& b) {
    if (a.eps != b.eps) return a.eps < b.eps;
    if (a.j != b.j) return a.j < b.j;
    if (a.ell != b.ell) return a.ell < b.ell;
    return a.k < b.k;
  }
};

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// A_{alpha,s} = diag(s^alpha, ..., s^alpha, s).
inline MatD alpha_scale(double alpha, double s, std::size_t d) {
  if (s <= 0.0) throw std::domain_error("alpha_scale: s must be positive");
  if (alpha < 0.0 || alpha > 1.0)
    throw std::domain_error("alpha_scale: alpha must be in [0,1]");
  if (d < 2) throw std::invalid_argument("alpha_scale: d must be >= 2");
  VecD diag(d, std::pow(s, alpha));
  diag[d - 1] = s;
  return MatD::diag(diag);
}

/// S_h (unit diagonal, h^T in the last row) or its transpose S^T_h.
inline MatD shear(const VecD& h, bool transposed, std::size_t d) {
  if (d < 2) throw std::invalid_argument("shear: d must be >= 2");
  if (h.size() != d - 1) throw std::invalid_argument("shear: h must have length d-1");
  MatD s = MatD::identity(d);
  for (std::size_t i = 0; i + 1 < d; ++i) {
    if (transposed)
      s(i, d - 1) = h[i];
    else
      s(d - 1, i) = h[i];
  }
  return s;
}

/// Cyclic permutation Z: e_d -> e_1, e_i -> e_{i+1}. Z^d = I.
inline MatD cyclic_perm(std::size_t d) {
  if (d < 2) throw std::invalid_argument("cyclic_perm: d must be >= 2");
  MatD z(d, d);
  z(0, d - 1) = 1.0;
  for (std::size_t i = 1; i < d; ++i) z(i, i - 1) = 1.0;
  return z;
}

/// Z^p for any integer power (negative = inverse), exact integer arithmetic.
inline MatD cyclic_perm_pow(std::size_t d, int p) {
  int r = p % static_cast<int>(d);
  if (r < 0) r += static_cast<int>(d);
  MatD z(d, d);
  // (Z^r x)_i = x_{(i - r) mod d}
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t src = (i + d - static_cast<std::size_t>(r)) % d;
    z(i, src) = 1.0;
  }
  return z;
}

/// Applies Z^p to a vector without building the matrix.
inline VecD apply_cyclic(const VecD& v, int p) {
  const std::size_t d = v.size();
  int r = p % static_cast<int>(d);
  if (r < 0) r += static_cast<int>(d);
  VecD out(d);
  for (std::size_t i = 0; i < d; ++i) out[(i + static_cast<std::size_t>(r)) % d] = v[i];
  return out;
}

/// Pyramid classification: 0 when |xi|_inf <= box_c, otherwise the smallest
/// axis index (1-based) carrying the maximal |component|.
inline int pyramid_of(const VecD& xi, double box_c) {
  double m = 0.0;
  for (double c : xi) m = std::max(m, std::fabs(c));
  if (m <= box_c) return 0;
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (std::fabs(xi[i]) == m) return static_cast<int>(i) + 1;
  return static_cast<int>(xi.size());  // unreachable
}

// ---------------------------------------------------------------------------
// Sampling data D = {sigma, Theta, L, T}
// ---------------------------------------------------------------------------

/// Sampling data for a shearlet parametrization. eta is the directional step
/// rule j -> eta_j, shear_sets the rule (eps,j) -> L_{eps,j}. The declared
/// constants c_eta, c_shear turn the asymptotic conditions
/// eta_j ~ sigma^{-j(1-alpha)} and max|l| <~ sigma^{j(1-alpha)} into
/// checkable inequalities.
struct SamplingData {
  double sigma = 4.0;
  double alpha = 0.5;
  std::function<double(int)> eta = [](int j) { return std::pow(2.0, -j); };
  std::function<std::vector<std::array<int, 2>>(int, int)> shear_sets = sh_shear_set;
  VecD tau = {1.0, 1.0, 1.0};
  double c_eta = 2.0;
  double c_shear = 2.0;
  double tau_min = 0.125;
  double tau_max = 8.0;

  /// The SH shear sets: |l1| <= 2^j, |l2| < 2^j for eps in {2,3}, plus the
  /// four corners (+-2^j, +-2^j) for eps = 1.
  static std::vector<std::array<int, 2>> sh_shear_set(int eps, int j) {
    std::vector<std::array<int, 2>> out;
    const int b = 1 << j;
    for (int l1 = -b; l1 <= b; ++l1)
      for (int l2 = -(b - 1); l2 <= b - 1; ++l2) out.push_back({l1, l2});
    if (eps == 1)
      for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) out.push_back({s1 * b, s2 * b});
    return out;
  }

  std::size_t dim() const { return tau.size(); }

  /// Checks the declared inequalities up to scale j_max; throws on violation.
  void validate(int j_max = 8) const {
    if (sigma <= 1.0) throw std::invalid_argument("SamplingData: sigma must be > 1");
    if (alpha < 0.0 || alpha > 1.0)
      throw std::invalid_argument("SamplingData: alpha must be in [0,1]");
    if (tau.size() < 2) throw std::invalid_argument("SamplingData: need d >= 2");
    for (double t : tau)
      if (t < tau_min || t > tau_max)
        throw std::invalid_argument("SamplingData: tau outside [tau_min, tau_max]");
    for (int j = 0; j <= j_max; ++j) {
      const double target = std::pow(sigma, -j * (1.0 - alpha));
      const double ratio = eta(j) / target;
      if (ratio > c_eta || ratio < 1.0 / c_eta)
        throw std::invalid_argument("SamplingData: eta_j violates the c_eta band");
      int lmax = 0;
      for (int eps = 1; eps <= static_cast<int>(dim()); ++eps)
        for (const auto& l : shear_sets(eps, j))
          lmax = std::max({lmax, std::abs(l[0]), std::abs(l[1])});
      if (lmax > c_shear * std::pow(sigma, j * (1.0 - alpha)))
        throw std::invalid_argument("SamplingData: shear range violates c_shear bound");
    }
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"sigma", sigma},
                          {"alpha", alpha},
                          {"eta_rule", "pow2_negj"},
                          {"shear_rule", "sh"},
                          {"tau", tau},
                          {"c_eta", c_eta},
                          {"c_shear", c_shear}};
  }

  /// Restores the built-in rules; only the named rules serialize.
  static SamplingData from_json(const nlohmann::json& js) {
    SamplingData D;
    D.sigma = js.at("sigma").get<double>();
    D.alpha = js.at("alpha").get<double>();
    D.tau = js.at("tau").get<VecD>();
    D.c_eta = js.at("c_eta").get<double>();
    D.c_shear = js.at("c_shear").get<double>();
    if (js.at("eta_rule").get<std::string>() != "pow2_negj" ||
        js.at("shear_rule").get<std::string>() != "sh")
      throw std::invalid_argument("SamplingData: unknown rule name");
    return D;
  }
};

// ---------------------------------------------------------------------------
// Shearlet parametrization Phi^s
// ---------------------------------------------------------------------------

inline bool index_valid(const ShearletIndex& idx, const SamplingData& D) {
  const int d = static_cast<int>(D.dim());
  if (static_cast<int>(idx.k.size()) != d ||
      static_cast<int>(idx.ell.size()) != d - 1)
    return false;
  if (idx.eps < 0 || idx.eps > d || idx.j < 0) return false;
  if (idx.eps == 0) {
    if (idx.j != 0) return false;
    for (int l : idx.ell)
      if (l != 0) return false;
    return true;
  }
  if (d == 3) {
    const auto set = D.shear_sets(idx.eps, idx.j);
    return std::find(set.begin(), set.end(),
                     std::array<int, 2>{idx.ell[0], idx.ell[1]}) != set.end();
  }
  return true;  // general d: shear sets are only tabulated for d = 3
}

/// Phi^s: (eps,j,l,k) -> (sigma^j, n Z^eps (eta_j l, 1)^T,
///                        Z^eps S^{-1}_{l eta_j} A^{-j} Z^{-eps} T k).
inline PhasePoint shearlet_phase(const ShearletIndex& idx, const SamplingData& D,
                                 double alpha) {
  const std::size_t d = D.dim();
  if (!index_valid(idx, D)) throw std::invalid_argument("shearlet_phase: invalid index");
  if (idx.eps == 0) {
    VecD x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = D.tau[i] * idx.k[i];
    return PhasePoint(1.0, unit_vector(d, d - 1), std::move(x));
  }
  const double s = std::pow(D.sigma, idx.j);
  const double etaj = D.eta(idx.j);

  VecD h(d - 1);
  double l2sq = 0.0;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    h[i] = etaj * idx.ell[i];
    l2sq += static_cast<double>(idx.ell[i]) * idx.ell[i];
  }
  const double n_lambda = 1.0 / std::sqrt(1.0 + etaj * etaj * l2sq);

  VecD e0(d);
  for (std::size_t i = 0; i + 1 < d; ++i) e0[i] = n_lambda * h[i];
  e0[d - 1] = n_lambda;
  VecD e = apply_cyclic(e0, idx.eps);
  // Renormalize against rounding before PhasePoint validates.
  const double en = norm2(e);
  for (auto& c : e) c /= en;

  VecD tk(d);
  for (std::size_t i = 0; i < d; ++i) tk[i] = D.tau[i] * idx.k[i];
  VecD y = apply_cyclic(tk, -idx.eps);
  // A^{-j} then S^{-1}_h: S^{-1}_h = S_{-h} acts as y_d -= <h, y_head>.
  const double sa = std::pow(s, -alpha);
  for (std::size_t i = 0; i + 1 < d; ++i) y[i] *= sa;
  y[d - 1] /= s;
  for (std::size_t i = 0; i + 1 < d; ++i) y[d - 1] -= h[i] * y[i];
  VecD x = apply_cyclic(y, idx.eps);

  return PhasePoint(s, std::move(e), std::move(x));
}

// ---------------------------------------------------------------------------
// SH relabeling F_label (d = 3)
// ---------------------------------------------------------------------------

namespace detail {

/// Gamma = {(0,0,(0,0))} u {(eps,0,(+-1,0))} u {(1,0,(+-1,+-1))}, #Gamma = 11,
/// enumerated lexicographically by (eps, j, l1, l2).
inline const std::vector<std::array<int, 4>>& gamma_set() {
  static const std::vector<std::array<int, 4>> g = [] {
    std::vector<std::array<int, 4>> v;
    v.push_back({0, 0, 0, 0});
    for (int eps : {1, 2, 3})
      for (int s : {-1, 1}) v.push_back({eps, 0, s, 0});
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1}) v.push_back({1, 0, s1, s2});
    std::sort(v.begin(), v.end());
    return v;
  }();
  return g;
}

inline int gamma_number(int eps, int j, int l1, int l2) {
  const auto& g = gamma_set();
  const std::array<int, 4> key{eps, j, l1, l2};
  const auto it = std::find(g.begin(), g.end(), key);
  return it == g.end() ? -1 : static_cast<int>(it - g.begin());
}

}  // namespace detail

/// True when idx lies in the SH index set Lambda_SH (d = 3).
inline bool in_lambda_sh(const ShearletIndex& idx) {
  if (idx.dim() != 3 || idx.ell.size() != 2 || idx.j < 0) return false;
  if (idx.eps == 0)
    return idx.j == 0 && idx.ell[0] == 0 && idx.ell[1] == 0;
  if (idx.eps < 1 || idx.eps > 3) return false;
  const int b = 1 << idx.j;
  const int l1 = idx.ell[0], l2 = idx.ell[1];
  if (std::abs(l1) <= b && std::abs(l2) <= b - 1) return true;
  return idx.eps == 1 && std::abs(l1) == b && std::abs(l2) == b;
}

/// F_label: indices in Delta = Gamma x Z^3 collapse onto the coarse label
/// with k~ = (k1, k2, 11 k3 + N(eps,j,l)); everything else is unchanged.
inline ShearletIndex relabel_SH(const ShearletIndex& idx) {
  if (!in_lambda_sh(idx)) throw std::invalid_argument("relabel_SH: index outside Lambda_SH");
  const int n = detail::gamma_number(idx.eps, idx.j, idx.ell[0], idx.ell[1]);
  if (n < 0) return idx;
  ShearletIndex out;
  out.eps = 0;
  out.j = 0;
  out.ell = {0, 0};
  out.k = {idx.k[0], idx.k[1], 11 * idx.k[2] + n};
  return out;
}

}  // namespace amol
