#pragma once

// Smooth frequency-domain profiles: the Meyer-type scaling profile phi_hat,
// the product window Phi_hat, the corona window W, the directional bump v and
// the angular window V. All partition identities hold exactly:
//   beta(t) + beta(1-t) = 1
//   v(u)^2 summed over integer shifts = 1
//   Phi_hat^2(xi) + sum_{j=0..J} W^2(2^{-2j} xi) = Phi_hat^2(2^{-2(J+1)} xi)

#include <cmath>
#include <stdexcept>

#include "amol/core.hpp"

namespace amol {

/// Profile configuration. steepness = 0 selects the C^inf exp(-1/t) mollifier
/// step (the default); steepness = n >= 1 selects the polynomial step of order
/// n (C^n, cheaper). plateau is the half-width on which the bump v stays 1.
struct ProfileParams {
  int steepness = 0;
  double plateau = 1.0 / 16.0;

  void validate() const {
    if (steepness < 0) throw std::invalid_argument("ProfileParams: steepness < 0");
    if (plateau <= 0.0 || plateau >= 0.5)
      throw std::invalid_argument("ProfileParams: plateau must be in (0, 1/2)");
  }
};

namespace detail {

inline double exp_mollifier(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

/// Polynomial step of order n: normalized integral of (u(1-u))^n.
inline double poly_step(double t, int n) {
  // Incomplete integral of u^n (1-u)^n via the binomial expansion of (1-u)^n.
  double num = 0.0, den = 0.0, binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    const double c = binom / (n + k + 1);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    num += sign * c * std::pow(t, n + k + 1);
    den += sign * c;
    binom = binom * (n - k) / (k + 1);
  }
  return num / den;
}

}  // namespace detail

/// Smooth step: 0 for t <= 0, 1 for t >= 1, strictly increasing in between,
/// and beta(t) + beta(1-t) = 1.
inline double smooth_step(double t, const ProfileParams& p = {}) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  if (p.steepness == 0) {
    const double a = detail::exp_mollifier(t);
    const double b = detail::exp_mollifier(1.0 - t);
    return a / (a + b);
  }
  return detail::poly_step(t, p.steepness);
}

/// Directional bump: even, v = 1 on [-plateau, plateau], supp v in [-1,1],
/// |v(t-1)|^2 + |v(t)|^2 + |v(t+1)|^2 = 1 on [-1,1].
inline double bump_v(double t, const ProfileParams& p = {}) {
  const double u = std::fabs(t);
  const double delta = p.plateau;
  if (u <= delta) return 1.0;
  if (u >= 1.0 - delta) return 0.0;
  return std::cos(pi / 2 * smooth_step((u - delta) / (1.0 - 2.0 * delta), p));
}

/// Meyer-type scaling profile: even, 1 on [-1/16,1/16], 0 outside
/// [-1/8,1/8], monotone nonincreasing in |t|.
inline double meyer_phi_hat(double t, const ProfileParams& p = {}) {
  const double u = std::fabs(t);
  if (u <= 1.0 / 16.0) return 1.0;
  if (u >= 1.0 / 8.0) return 0.0;
  return std::cos(pi / 2 * smooth_step(16.0 * u - 1.0, p));
}

/// Phi_hat(xi) = phi_hat(xi_1) phi_hat(xi_2) phi_hat(xi_3).
inline double Phi_hat(const double xi[3], const ProfileParams& p = {}) {
  double r = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (std::fabs(xi[i]) >= 1.0 / 8.0) return 0.0;
    r *= meyer_phi_hat(xi[i], p);
  }
  return r;
}

/// Corona window W(xi) = sqrt(Phi_hat^2(xi/4) - Phi_hat^2(xi)); the max(0,.)
/// clips negative rounding residue instead of propagating NaN.
inline double W_window(const double xi[3], const ProfileParams& p = {}) {
  const double q[3] = {xi[0] / 4.0, xi[1] / 4.0, xi[2] / 4.0};
  const double outer = Phi_hat(q, p);
  const double inner = Phi_hat(xi, p);
  return std::sqrt(std::max(0.0, outer * outer - inner * inner));
}

/// Angular window V(xi) = v(xi_1/xi_3) v(xi_2/xi_3), supported in the third
/// pyramid; extended by 0 on the plane xi_3 = 0 (V(0) included).
inline double V_window(const double xi[3], const ProfileParams& p = {}) {
  if (xi[2] == 0.0) return 0.0;
  return bump_v(xi[0] / xi[2], p) * bump_v(xi[1] / xi[2], p);
}

// VecD conveniences for the 3D windows.
inline double Phi_hat(const VecD& xi, const ProfileParams& p = {}) {
  if (xi.size() != 3) throw std::invalid_argument("Phi_hat: need a 3-vector");
  const double a[3] = {xi[0], xi[1], xi[2]};
  return Phi_hat(a, p);
}
inline double W_window(const VecD& xi, const ProfileParams& p = {}) {
  if (xi.size() != 3) throw std::invalid_argument("W: need a 3-vector");
  const double a[3] = {xi[0], xi[1], xi[2]};
  return W_window(a, p);
}
inline double V_window(const VecD& xi, const ProfileParams& p = {}) {
  if (xi.size() != 3) throw std::invalid_argument("V: need a 3-vector");
  const double a[3] = {xi[0], xi[1], xi[2]};
  return V_window(a, p);
}

}  // namespace amol
