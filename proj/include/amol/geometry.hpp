#pragma once

// Directions on the unit sphere S^{d-1}, the angle parametrization
// eta = R^T_phi R^T_theta e_d, projected angles, and the gnomonic projection.
// Everything works for arbitrary d >= 2.

#include <cmath>
#include <stdexcept>

#include "amol/core.hpp"

namespace amol {

/// Unit vector in R^d, d >= 2. Construction checks |coords| = 1 within 1e-12.
struct Direction {
  VecD coords;

  explicit Direction(VecD c) : coords(std::move(c)) {
    if (coords.size() < 2) throw std::invalid_argument("Direction: d must be >= 2");
    if (std::fabs(norm2(coords) - 1.0) > 1e-12)
      throw std::invalid_argument("Direction: not a unit vector");
  }

  std::size_t dim() const { return coords.size(); }
};

/// Angles (theta_1,...,theta_{d-2}, phi) with theta_1 in [0,pi],
/// theta_i in [-pi/2,pi/2] for i >= 2, phi in [0,2pi). For d = 2 theta is empty.
struct AngleSet {
  VecD theta;
  double phi = 0.0;

  AngleSet() = default;
  AngleSet(VecD th, double ph) : theta(std::move(th)), phi(ph) {
    if (!theta.empty()) {
      if (theta[0] < -1e-12 || theta[0] > pi + 1e-12)
        throw std::invalid_argument("AngleSet: theta_1 outside [0,pi]");
      for (std::size_t i = 1; i < theta.size(); ++i)
        if (std::fabs(theta[i]) > pi / 2 + 1e-12)
          throw std::invalid_argument("AngleSet: theta_i outside [-pi/2,pi/2]");
    }
    if (phi < -1e-12 || phi >= 2 * pi + 1e-12)
      throw std::invalid_argument("AngleSet: phi outside [0,2pi)");
  }
};

/// eta(theta,phi) = R^T_phi R^T_theta e_d, written out component-wise.
/// For d = 2 this degenerates to eta = R^T_phi e_2 = (-sin phi, cos phi).
inline Direction direction_from_angles(const AngleSet& a, std::size_t d) {
  if (d < 2) throw std::invalid_argument("direction_from_angles: d must be >= 2");
  if (a.theta.size() != d - 2)
    throw std::invalid_argument("direction_from_angles: need d-2 theta angles");
  VecD eta(d, 0.0);
  if (d == 2) {
    eta[0] = -std::sin(a.phi);
    eta[1] = std::cos(a.phi);
    return Direction(eta);
  }
  const double s1 = std::sin(a.theta[0]);
  eta[d - 1] = std::cos(a.theta[0]);
  // eta_{d-k} = -sin(theta_{k}) * cos(theta_{k-1}) * ... * cos(theta_2) * sin(theta_1)
  double run = s1;  // sin(theta_1) * prod of cos of the thetas consumed so far
  for (std::size_t k = 2; k <= d - 2; ++k) {
    eta[d - k] = -std::sin(a.theta[k - 1]) * run;
    run *= std::cos(a.theta[k - 1]);
  }
  eta[0] = std::cos(a.phi) * run;
  eta[1] = std::sin(a.phi) * run;
  // Guard against accumulated rounding before the Direction norm check.
  const double n = norm2(eta);
  for (auto& x : eta) x /= n;
  return Direction(eta);
}

/// Inverse of direction_from_angles. At the poles (sin theta_1 = 0) all
/// remaining angles are unidentifiable; the canonical form is all-zero theta
/// and phi = 0. The same convention applies at deeper degeneracies.
inline AngleSet angles_from_direction(const Direction& e) {
  const std::size_t d = e.dim();
  if (d == 2) {
    double phi = std::atan2(-e.coords[0], e.coords[1]);
    if (phi < 0) phi += 2 * pi;
    if (phi >= 2 * pi) phi = 0.0;
    return AngleSet({}, phi);
  }
  VecD theta(d - 2, 0.0);
  const double cd = std::clamp(e.coords[d - 1], -1.0, 1.0);
  theta[0] = std::acos(cd);
  double run = std::sin(theta[0]);
  if (run <= 1e-14) {
    // Pole: theta_1 is 0 or pi, everything else is unidentifiable -> zero.
    theta[0] = cd >= 0 ? 0.0 : pi;
    return AngleSet(std::move(theta), 0.0);
  }
  for (std::size_t k = 2; k <= d - 2; ++k) {
    const double s = std::clamp(-e.coords[d - k] / run, -1.0, 1.0);
    theta[k - 1] = std::asin(s);
    run *= std::cos(theta[k - 1]);
    if (run <= 1e-14) {
      // Equatorial degeneracy: remaining angles are unidentifiable.
      for (std::size_t m = k; m <= d - 2; ++m) theta[m - 1] = 0.0;
      return AngleSet(std::move(theta), 0.0);
    }
  }
  double phi = std::atan2(e.coords[1], e.coords[0]);
  if (phi < 0) phi += 2 * pi;
  if (phi >= 2 * pi) phi = 0.0;
  return AngleSet(std::move(theta), phi);
}

/// Inner products within 1e-12 of +-1 snap to +-1 so that coincident (and
/// antipodal) directions give exactly 0 and pi.
inline double clamp_inner(double c) {
  if (c >= 1.0 - 1e-12) return 1.0;
  if (c <= -1.0 + 1e-12) return -1.0;
  return c;
}

/// d_S(v,w) = arccos(<v,w>) in [0,pi]; the inner product is clamped to [-1,1]
/// to absorb rounding on near-parallel vectors.
inline double sphere_distance(const Direction& v, const Direction& w) {
  if (v.dim() != w.dim())
    throw std::invalid_argument("sphere_distance: dimension mismatch");
  return std::acos(clamp_inner(dot(v.coords, w.coords)));
}

/// Projection of theta onto [-pi/2, pi/2) modulo pi.
inline double project_angle(double theta) {
  double r = std::fmod(theta + pi / 2, pi);
  if (r < 0) r += pi;
  return r - pi / 2;
}

/// Gnomonic projection x -> x / [x]_d onto the plane { [x]_d = 1 }.
inline VecD gnomonic(const VecD& x) {
  if (x.size() < 2) throw std::invalid_argument("gnomonic: d must be >= 2");
  const double last = x.back();
  if (last == 0.0) throw std::domain_error("gnomonic: last component is zero");
  VecD r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] / last;
  return r;
}

}  // namespace amol
