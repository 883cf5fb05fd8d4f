#pragma once

// Cartoon-like test data: f0 + f1 chi_B with C^2 bump parts and an ellipsoid
// discontinuity whose principal curvatures stay below a declared bound.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "amol/core.hpp"
#include "amol/frame3d.hpp"
#include "json.hpp"

namespace amol {

/// Smooth part: either the tensor bump amp * prod (1-(2x_i-1)^2)^3 on
/// [0,1]^d or a constant (the latter mainly for volume-counting tests).
struct SmoothPart {
  enum class Kind { bump, constant } kind = Kind::bump;
  double amplitude = 0.0;
};

struct PhantomSpec {
  int d = 3;
  double nu = 10.0;
  VecD center;     // in [0,1]^d
  VecD semi_axes;  // ellipsoid semi-axes, axis-aligned
  SmoothPart f0;
  SmoothPart f1;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"d", d},
        {"nu", nu},
        {"center", center},
        {"semi_axes", semi_axes},
        {"f0", {{"kind", f0.kind == SmoothPart::Kind::bump ? "bump" : "constant"},
                {"amplitude", f0.amplitude}}},
        {"f1", {{"kind", f1.kind == SmoothPart::Kind::bump ? "bump" : "constant"},
                {"amplitude", f1.amplitude}}},
        {"seed", seed}};
  }
};

namespace detail {

// C^2 norm of the univariate factor g(x) = (1-(2x-1)^2)^3 on [0,1]:
// max(|g|, |g'|, |g''|) = max(1, 2 * 96/(25 sqrt 5), 4 * 6) = 24.
inline constexpr double bump_c2_norm = 24.0;

inline double bump_factor(double x) {
  const double t = 2.0 * x - 1.0;
  const double u = 1.0 - t * t;
  return u <= 0.0 ? 0.0 : u * u * u;
}

inline double smooth_value(const SmoothPart& part, const VecD& x) {
  if (part.kind == SmoothPart::Kind::constant) return part.amplitude;
  double v = part.amplitude;
  for (double c : x) v *= bump_factor(c);
  return v;
}

}  // namespace detail

/// Max principal curvature of an axis-aligned ellipsoid: a_max / a_min^2.
inline double ellipsoid_max_curvature(const VecD& semi_axes) {
  double lo = semi_axes[0], hi = semi_axes[0];
  for (double a : semi_axes) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return hi / (lo * lo);
}

inline bool phantom_curvature_ok(const PhantomSpec& s) {
  return ellipsoid_max_curvature(s.semi_axes) <= s.nu;
}

/// Random phantom: ellipsoid inside [0,1]^d passing the curvature check plus
/// bump parts with certified C^2 norms <= 1. Deterministic per seed.
inline PhantomSpec make_phantom(double nu, int d, std::uint64_t seed) {
  if (d != 2 && d != 3) throw std::invalid_argument("make_phantom: d must be 2 or 3");
  if (nu <= 0.0) throw std::domain_error("make_phantom: nu must be positive");
  // A sphere of radius r has curvature 1/r; fitting inside the unit cube
  // needs r <= 0.45 (margin), so nu must allow 1/nu <= 0.45.
  const double r_min = 1.0 / nu;
  const double r_cap = 0.45;
  if (r_min > r_cap)
    throw std::domain_error("make_phantom: nu too small to fit an admissible ellipsoid");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PhantomSpec spec;
  spec.d = d;
  spec.nu = nu;
  spec.seed = seed;
  spec.semi_axes.resize(d);
  spec.center.resize(d);

  // Draw the smallest axis first, then the others within the curvature cap
  // a_max <= nu a_min^2.
  const double a_min = r_min + (r_cap - r_min) * (0.25 + 0.5 * unit(rng));
  const double a_cap = std::min(r_cap, nu * a_min * a_min);
  for (int i = 0; i < d; ++i)
    spec.semi_axes[i] = a_min + (a_cap - a_min) * unit(rng);
  spec.semi_axes[static_cast<int>(unit(rng) * d) % d] = a_min;
  for (int i = 0; i < d; ++i) {
    const double a = spec.semi_axes[i];
    const double lo = a + 0.02, hi = 1.0 - a - 0.02;
    spec.center[i] = hi <= lo ? 0.5 : lo + (hi - lo) * unit(rng);
  }

  spec.f0 = {SmoothPart::Kind::bump, (0.2 + 0.3 * unit(rng)) / detail::bump_c2_norm};
  spec.f1 = {SmoothPart::Kind::bump, (0.7 + 0.3 * unit(rng)) / detail::bump_c2_norm};
  if (unit(rng) < 0.5) spec.f1.amplitude = -spec.f1.amplitude;

  if (!phantom_curvature_ok(spec))
    throw std::logic_error("make_phantom: generated spec fails its own curvature check");
  return spec;
}

inline bool ellipsoid_contains(const PhantomSpec& s, const VecD& x) {
  double q = 0.0;
  for (int i = 0; i < s.d; ++i) {
    const double t = (x[i] - s.center[i]) / s.semi_axes[i];
    q += t * t;
  }
  return q <= 1.0;
}

/// Samples f0 + f1 chi_B at cell centers of an n^d grid over [0,1]^d.
/// For d = 2 the volume holds one filled plane (frame transforms are 3D).
inline SampledVolume rasterize(const PhantomSpec& spec, std::size_t n) {
  if (n < 8) throw std::invalid_argument("rasterize: n must be >= 8");
  SampledVolume vol = SampledVolume::zeros(n);
  const std::size_t planes = spec.d == 3 ? n : 1;
  parallel_for(0, planes, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i0 = lo; i0 < hi; ++i0)
      for (std::size_t i1 = 0; i1 < n; ++i1)
        for (std::size_t i2 = 0; i2 < n; ++i2) {
          VecD x;
          if (spec.d == 3)
            x = {(i0 + 0.5) / n, (i1 + 0.5) / n, (i2 + 0.5) / n};
          else
            x = {(i1 + 0.5) / n, (i2 + 0.5) / n};
          double v = detail::smooth_value(spec.f0, x);
          if (ellipsoid_contains(spec, x)) v += detail::smooth_value(spec.f1, x);
          vol.data[(i0 * n + i1) * n + i2] = v;
        }
  });
  return vol;
}

}  // namespace amol
