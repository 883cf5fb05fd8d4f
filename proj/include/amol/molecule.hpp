#pragma once

// Molecule and shearlet-molecule weight functions, a numerical order checker
// for generators (uniform-grid and support-adapted variants), and the
// shearlet-to-molecule transfer matrices.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "amol/core.hpp"
#include "amol/frame3d.hpp"
#include "amol/geometry.hpp"
#include "amol/parametrization.hpp"
#include "json.hpp"

namespace amol {

/// Order (L, M, N1, N2); `infinite` marks an unbounded component. Numerical
/// checks always run against a finite surrogate.
struct MoleculeOrder {
  static constexpr int infinite = -1;
  int L = 0;
  int M = 0;
  int N1 = 0;
  int N2 = 0;

  bool finite() const { return L >= 0 && M >= 0 && N1 >= 0 && N2 >= 0; }
};

/// Molecule weight: min(1, s^-1 + |[xi]_d| + s^{-(1-a)} |xi|_{[d-1]})^M
///                  * <|xi|>^{-N1} * <|xi|_{[d-1]}>^{-N2}.
inline double weight_molcon(const VecD& xi, double alpha, double s,
                            const MoleculeOrder& order) {
  if (s <= 0.0) throw std::domain_error("weight_molcon: s must be positive");
  if (!order.finite()) throw std::invalid_argument("weight_molcon: order must be finite");
  const double head = norm_head(xi);
  const double tail = std::fabs(xi.back());
  const double full = std::sqrt(head * head + tail * tail);
  const double m = std::min(1.0, 1.0 / s + tail + std::pow(s, alpha - 1.0) * head);
  return std::pow(m, order.M) * std::pow(bracket(full), -order.N1) *
         std::pow(bracket(head), -order.N2);
}

/// Shearlet-molecule weight:
/// min(1, sigma^-j + sigma^{-(1-a)j} |Z^-e xi|_{[d-1]} + |[Z^-e xi]_d|)^M
///   / ( <|xi|>^{N1} <|Z^-e xi|_{[d-1]}>^{N2} ).
inline double weight_shearcon(const VecD& xi, double alpha, double sigma, int j,
                              int eps, const MoleculeOrder& order) {
  if (sigma <= 1.0) throw std::domain_error("weight_shearcon: sigma must be > 1");
  if (j < 0) throw std::domain_error("weight_shearcon: j must be >= 0");
  if (!order.finite())
    throw std::invalid_argument("weight_shearcon: order must be finite");
  const VecD z = apply_cyclic(xi, -eps);
  const double head = norm_head(z);
  const double tail = std::fabs(z.back());
  const double full = norm2(xi);
  const double m = std::min(
      1.0, std::pow(sigma, -j) + std::pow(sigma, -(1.0 - alpha) * j) * head + tail);
  return std::pow(m, order.M) /
         (std::pow(bracket(full), order.N1) * std::pow(bracket(head), order.N2));
}

// ---------------------------------------------------------------------------
// Order checking
// ---------------------------------------------------------------------------

struct WeightParams {
  enum class Mode { molecule, shearlet } mode = Mode::molecule;
  double alpha = 0.5;
  double s = 1.0;      // molecule mode
  double sigma = 4.0;  // shearlet mode
  int j = 0;
  int eps = 3;

  double weight(const VecD& xi, const MoleculeOrder& order) const {
    return mode == Mode::molecule ? weight_molcon(xi, alpha, s, order)
                                  : weight_shearcon(xi, alpha, sigma, j, eps, order);
  }
};

struct OrderCheckReport {
  double constant = 0.0;
  std::map<std::string, double> per_derivative;  // "abc" = rho, value = sup ratio

  nlohmann::json to_json() const {
    return nlohmann::json{{"constant", constant}, {"per_derivative", per_derivative}};
  }
};

namespace detail {

inline const std::vector<std::array<int, 3>>& derivative_set(int L) {
  static const std::vector<std::array<int, 3>> all = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
      {2, 0, 0}, {0, 2, 0}, {0, 0, 2}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
  static const std::vector<std::array<int, 3>> l0(all.begin(), all.begin() + 1);
  static const std::vector<std::array<int, 3>> l1(all.begin(), all.begin() + 4);
  if (L <= 0) return l0;
  if (L == 1) return l1;
  return all;
}

inline std::string rho_name(const std::array<int, 3>& rho) {
  return std::to_string(rho[0]) + std::to_string(rho[1]) + std::to_string(rho[2]);
}

/// Central-difference derivative of f around x with per-axis steps h.
inline double stencil_derivative(const std::function<double(const double[3])>& f,
                                 const double x[3], const double h[3],
                                 const std::array<int, 3>& rho) {
  auto at = [&](double d0, double d1, double d2) {
    const double p[3] = {x[0] + d0, x[1] + d1, x[2] + d2};
    return f(p);
  };
  const int total = rho[0] + rho[1] + rho[2];
  if (total == 0) return at(0, 0, 0);
  if (total == 1) {
    const int ax = rho[0] ? 0 : (rho[1] ? 1 : 2);
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    hi[ax] = h[ax];
    lo[ax] = -h[ax];
    return (at(hi[0], hi[1], hi[2]) - at(lo[0], lo[1], lo[2])) / (2.0 * h[ax]);
  }
  // |rho| = 2: pure or mixed second derivative.
  for (int ax = 0; ax < 3; ++ax)
    if (rho[ax] == 2) {
      double hi[3] = {0, 0, 0}, lo[3] = {0, 0, 0};
      hi[ax] = h[ax];
      lo[ax] = -h[ax];
      return (at(hi[0], hi[1], hi[2]) - 2.0 * at(0, 0, 0) + at(lo[0], lo[1], lo[2])) /
             (h[ax] * h[ax]);
    }
  int a1 = -1, a2 = -1;
  for (int ax = 0; ax < 3; ++ax)
    if (rho[ax] == 1) (a1 < 0 ? a1 : a2) = ax;
  auto pt = [&](int s1, int s2) {
    double d[3] = {0, 0, 0};
    d[a1] = s1 * h[a1];
    d[a2] = s2 * h[a2];
    return at(d[0], d[1], d[2]);
  };
  return (pt(1, 1) - pt(1, -1) - pt(-1, 1) + pt(-1, -1)) / (4.0 * h[a1] * h[a2]);
}

}  // namespace detail

/// Uniform-grid order check: g_hat sampled on a centered cubic grid covering
/// [-extent, extent]^3 (cell centers). Derivatives by central differences on
/// the samples; errors out when the grid step exceeds 1/8 of the declared
/// smallest transition band of g_hat.
inline OrderCheckReport order_check(const SampledVolume& g_hat, double extent,
                                    double min_band, const WeightParams& wp,
                                    const MoleculeOrder& surrogate) {
  if (!surrogate.finite() || surrogate.L > 2)
    throw std::invalid_argument("order_check: surrogate order must be finite with L <= 2");
  if (g_hat.n < 8) throw std::invalid_argument("order_check: grid too small");
  const std::size_t n = g_hat.n;
  const double step = 2.0 * extent / static_cast<double>(n);
  if (step > min_band / 8.0)
    throw std::invalid_argument("order_check: grid too coarse for requested L");

  const auto& rhos = detail::derivative_set(surrogate.L);
  std::vector<double> sup(rhos.size(), 0.0);

  const auto value = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
    return std::abs(g_hat.data[(i0 * n + i1) * n + i2]);
  };
  // |d^rho g| <= d^rho |g| does not hold in general, but the generators this
  // check targets are real and nonnegative; for complex data the modulus is
  // differentiated, which upper-bounds the constant only up to phase effects.
  std::vector<std::vector<double>> plane_all(n);
  parallel_for(1, n - 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i0 = lo; i0 < hi; ++i0) {
      std::vector<double> local(rhos.size(), 0.0);
      for (std::size_t i1 = 1; i1 + 1 < n; ++i1)
        for (std::size_t i2 = 1; i2 + 1 < n; ++i2) {
          const VecD xi{(static_cast<double>(i0) - n / 2.0 + 0.5) * step,
                        (static_cast<double>(i1) - n / 2.0 + 0.5) * step,
                        (static_cast<double>(i2) - n / 2.0 + 0.5) * step};
          const double w = wp.weight(xi, surrogate);
          for (std::size_t r = 0; r < rhos.size(); ++r) {
            const auto& rho = rhos[r];
            double d = 0.0;
            const int tot = rho[0] + rho[1] + rho[2];
            if (tot == 0) {
              d = value(i0, i1, i2);
            } else if (tot == 1) {
              if (rho[0])
                d = (value(i0 + 1, i1, i2) - value(i0 - 1, i1, i2)) / (2 * step);
              else if (rho[1])
                d = (value(i0, i1 + 1, i2) - value(i0, i1 - 1, i2)) / (2 * step);
              else
                d = (value(i0, i1, i2 + 1) - value(i0, i1, i2 - 1)) / (2 * step);
            } else if (rho[0] == 2) {
              d = (value(i0 + 1, i1, i2) - 2 * value(i0, i1, i2) +
                   value(i0 - 1, i1, i2)) /
                  (step * step);
            } else if (rho[1] == 2) {
              d = (value(i0, i1 + 1, i2) - 2 * value(i0, i1, i2) +
                   value(i0, i1 - 1, i2)) /
                  (step * step);
            } else if (rho[2] == 2) {
              d = (value(i0, i1, i2 + 1) - 2 * value(i0, i1, i2) +
                   value(i0, i1, i2 - 1)) /
                  (step * step);
            } else if (rho[0] == 1 && rho[1] == 1) {
              d = (value(i0 + 1, i1 + 1, i2) - value(i0 + 1, i1 - 1, i2) -
                   value(i0 - 1, i1 + 1, i2) + value(i0 - 1, i1 - 1, i2)) /
                  (4 * step * step);
            } else if (rho[0] == 1 && rho[2] == 1) {
              d = (value(i0 + 1, i1, i2 + 1) - value(i0 + 1, i1, i2 - 1) -
                   value(i0 - 1, i1, i2 + 1) + value(i0 - 1, i1, i2 - 1)) /
                  (4 * step * step);
            } else {
              d = (value(i0, i1 + 1, i2 + 1) - value(i0, i1 + 1, i2 - 1) -
                   value(i0, i1 - 1, i2 + 1) + value(i0, i1 - 1, i2 - 1)) /
                  (4 * step * step);
            }
            local[r] = std::max(local[r], std::fabs(d) / w);
          }
        }
      plane_all[i0] = std::move(local);
    }
  });
  for (std::size_t i0 = 1; i0 + 1 < n; ++i0)
    for (std::size_t r = 0; r < rhos.size(); ++r)
      sup[r] = std::max(sup[r], plane_all[i0].empty() ? 0.0 : plane_all[i0][r]);

  OrderCheckReport rep;
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    rep.per_derivative[detail::rho_name(rhos[r])] = sup[r];
    rep.constant = std::max(rep.constant, sup[r]);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// SH generators and the support-adapted checker
// ---------------------------------------------------------------------------

/// Magnitude of the SH generator gamma^eps_{j,l} after the change of
/// variables: |gamma^(xi)| = c * window(Z^eps A^j S^T_l Z^-eps xi) with c
/// chosen so the atom prefactor cancels (1 for coarse/interior, 1/8 for
/// boundary and corner atoms at j >= 1).
inline double sh_generator_hat(const WindowKey& key, const double xi[3],
                               const ProfileParams& prof = {}) {
  if (key.eps == 0) return window_eval(key, xi, prof);
  const double tj = std::ldexp(1.0, key.j);    // 2^j
  const double t2j = std::ldexp(1.0, 2 * key.j);  // 4^j
  double z[3];
  detail::rot3(xi, key.eps, z);
  // A^j S^T_l z = (2^j(z1 + l1 z3 / 2^j) ... ) expanded directly:
  const double az[3] = {tj * z[0] + tj * key.ell[0] * z[2],
                        tj * z[1] + tj * key.ell[1] * z[2], t2j * z[2]};
  double out[3];
  detail::rot3(az, -key.eps, out);
  const double w = window_eval(key, out, prof);
  const bool bc = atom_kind(key) == AtomKind::boundary || atom_kind(key) == AtomKind::corner;
  return (bc && key.j >= 1 ? 0.125 : 1.0) * w;
}

/// Support-adapted order check for a real nonnegative generator: central
/// differences with per-point steps h_i = local feature width / 8, sampled on
/// a multiplicative xi_3 ladder times a uniform ratio grid. Used where the
/// uniform-grid contract would need billions of samples (j >= 2).
inline OrderCheckReport order_check_adaptive(
    const std::function<double(const double[3])>& g, const WeightParams& wp,
    const MoleculeOrder& surrogate, int eps, double r_inner = 1.0 / 32.0,
    double r_outer = 0.5, std::size_t n_ratio = 64, std::size_t n_radial = 96,
    double plateau = 1.0 / 16.0) {
  if (!surrogate.finite() || surrogate.L > 2)
    throw std::invalid_argument("order_check_adaptive: order must be finite, L <= 2");
  const auto& rhos = detail::derivative_set(surrogate.L);
  std::vector<std::vector<double>> sup_slices(n_radial,
                                              std::vector<double>(rhos.size(), 0.0));

  parallel_for(0, n_radial, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ir = lo; ir < hi; ++ir) {
      auto& sup = sup_slices[ir];
      const double frac = (ir + 0.5) / static_cast<double>(n_radial);
      const double r3 = r_inner * std::pow(r_outer / r_inner, frac);
      const double vw = (1.0 - 2.0 * plateau) * r3;  // v transition width at |xi_3| = r3
      double h[3];
      h[0] = h[1] = std::min(vw, 1.0 / 16.0) / 8.0;
      h[2] = std::min(0.875 * r3, 1.0 / 16.0) / 8.0;
      for (int sgn : {1, -1}) {
        for (std::size_t i1 = 0; i1 < n_ratio; ++i1) {
          const double w1 = -1.05 + 2.1 * (i1 + 0.5) / n_ratio;
          for (std::size_t i2 = 0; i2 < n_ratio; ++i2) {
            const double w2 = -1.05 + 2.1 * (i2 + 0.5) / n_ratio;
            double z[3] = {w1 * r3, w2 * r3, sgn * r3};
            double x[3];
            detail::rot3(z, -eps, x);
            // Steps are expressed in the own-pyramid frame; rotate them too.
            double hz[3] = {h[0], h[1], h[2]};
            double hx[3];
            detail::rot3(hz, -eps, hx);
            const VecD xi{x[0], x[1], x[2]};
            const double weight = wp.weight(xi, surrogate);
            for (std::size_t r = 0; r < rhos.size(); ++r) {
              const double d = detail::stencil_derivative(g, x, hx, rhos[r]);
              sup[r] = std::max(sup[r], std::fabs(d) / weight);
            }
          }
        }
      }
    }
  });

  OrderCheckReport rep;
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    double s = 0.0;
    for (const auto& slice : sup_slices) s = std::max(s, slice[r]);
    rep.per_derivative[detail::rho_name(rhos[r])] = s;
    rep.constant = std::max(rep.constant, s);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Transfer matrices
// ---------------------------------------------------------------------------

/// R_theta = G_{1,d}(theta_1) * G_{1,d-1}(theta_2) * ... * G_{1,3}(theta_{d-2}).
inline MatD rotation_theta(const VecD& theta, std::size_t d) {
  if (theta.size() != d - 2) throw std::invalid_argument("rotation_theta: need d-2 angles");
  MatD r = MatD::identity(d);
  for (std::size_t k = 1; k <= theta.size(); ++k) {
    const std::size_t m = d - k;  // 0-based second axis of the Givens block
    MatD g = MatD::identity(d);
    const double c = std::cos(theta[k - 1]), s = std::sin(theta[k - 1]);
    g(0, 0) = c;
    g(0, m) = -s;
    g(m, 0) = s;
    g(m, m) = c;
    r = r * g;
  }
  return r;
}

inline MatD rotation_phi(double phi, std::size_t d) {
  MatD r = MatD::identity(d);
  r(0, 0) = std::cos(phi);
  r(0, 1) = std::sin(phi);
  r(1, 0) = -std::sin(phi);
  r(1, 1) = std::cos(phi);
  return r;
}

struct TransferMatrices {
  MatD M;
  MatD M_tilde;
  double norm_M = 0.0;
  double norm_M_inv = 0.0;
  double norm_Mt = 0.0;
  double norm_Mt_inv = 0.0;
  double n_lambda = 1.0;
};

/// M = S^{-T}_{l eta_j} R^T_phi R^T_theta for the eps = d case, conjugated by
/// Z^eps otherwise; M~ = A^{-j} M A^{j} (conjugated likewise). Returns the
/// operator norms of M, M^-1, M~, M~^-1.
inline TransferMatrices transfer_matrices(const ShearletIndex& idx,
                                          const SamplingData& D, double alpha) {
  const std::size_t d = D.dim();
  if (idx.eps < 1 || idx.eps > static_cast<int>(d))
    throw std::invalid_argument("transfer_matrices: eps must be in 1..d");
  if (!index_valid(idx, D)) throw std::invalid_argument("transfer_matrices: invalid index");

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
  const double nn = norm2(e0);
  for (auto& c : e0) c /= nn;

  const AngleSet ang = angles_from_direction(Direction(e0));
  const MatD Rt = rotation_theta(ang.theta, d).transposed();
  const MatD Rp = rotation_phi(ang.phi, d).transposed();
  const MatD Sit = shear(h, true, d).inverse();  // S^{-T}
  MatD M = Sit * Rp * Rt;

  const double s = std::pow(D.sigma, idx.j);
  const MatD A = alpha_scale(alpha, s, d);
  const MatD Ai = alpha_scale(alpha, 1.0 / s, d);
  MatD Mt = Ai * M * A;

  const int conj = idx.eps - static_cast<int>(d);  // 0 when eps = d
  if (conj != 0) {
    const MatD Z = cyclic_perm_pow(d, idx.eps);
    const MatD Zi = cyclic_perm_pow(d, -idx.eps);
    M = Z * M * Zi;
    Mt = Z * Mt * Zi;
  }

  TransferMatrices out;
  out.M = M;
  out.M_tilde = Mt;
  out.norm_M = M.operator_norm();
  out.norm_M_inv = M.inverse().operator_norm();
  out.norm_Mt = Mt.operator_norm();
  out.norm_Mt_inv = Mt.inverse().operator_norm();
  out.n_lambda = n_lambda;
  return out;
}

}  // namespace amol
