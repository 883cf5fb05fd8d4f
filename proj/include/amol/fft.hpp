#pragma once

// Iterative radix-2 complex FFT for power-of-two lengths and its 3D form on
// cubic grids. Self-contained; sizes here never exceed a few hundred per axis.

#include <complex>
#include <stdexcept>
#include <vector>

#include "amol/core.hpp"

namespace amol {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

struct FftPlan {
  std::size_t n = 0;
  std::vector<std::size_t> rev;
  std::vector<cplx> tw;  // forward twiddles, per stage concatenated

  explicit FftPlan(std::size_t len) : n(len) {
    if (!is_pow2(n)) throw std::invalid_argument("FftPlan: length must be a power of two");
    rev.resize(n);
    std::size_t lg = 0;
    while ((std::size_t{1} << lg) < n) ++lg;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < lg; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (lg - 1 - b);
      rev[i] = r;
    }
    for (std::size_t len2 = 2; len2 <= n; len2 <<= 1)
      for (std::size_t k = 0; k < len2 / 2; ++k) {
        const double ang = -2.0 * pi * static_cast<double>(k) / static_cast<double>(len2);
        tw.emplace_back(std::cos(ang), std::sin(ang));
      }
  }

  /// In-place transform; inverse applies conjugate twiddles and the 1/n factor.
  void run(cplx* a, bool inverse) const {
    for (std::size_t i = 0; i < n; ++i)
      if (i < rev[i]) std::swap(a[i], a[rev[i]]);
    std::size_t toff = 0;
    for (std::size_t len2 = 2; len2 <= n; len2 <<= 1) {
      const std::size_t half = len2 / 2;
      for (std::size_t i = 0; i < n; i += len2)
        for (std::size_t k = 0; k < half; ++k) {
          const cplx w = inverse ? std::conj(tw[toff + k]) : tw[toff + k];
          const cplx u = a[i + k];
          const cplx v = a[i + k + half] * w;
          a[i + k] = u + v;
          a[i + k + half] = u - v;
        }
      toff += half;
    }
    if (inverse) {
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    }
  }
};

}  // namespace detail

/// 1D FFT, forward = sum_x f[x] exp(-2 pi i m x / n); inverse includes 1/n.
inline void fft_1d(std::vector<cplx>& a, bool inverse) {
  detail::FftPlan plan(a.size());
  plan.run(a.data(), inverse);
}

/// 3D FFT on an n^3 row-major volume (index x2 fastest), in place.
/// Forward: F[m] = sum_x f[x] exp(-2 pi i <m,x> / n); inverse carries 1/n^3.
inline void fft_3d(std::vector<cplx>& vol, std::size_t n, bool inverse) {
  if (vol.size() != n * n * n) throw std::invalid_argument("fft_3d: size mismatch");
  const detail::FftPlan plan(n);
  const auto idx = [n](std::size_t i0, std::size_t i1, std::size_t i2) {
    return (i0 * n + i1) * n + i2;
  };

  // Axis 2 (contiguous lines).
  parallel_for(0, n * n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t line = lo; line < hi; ++line)
      plan.run(vol.data() + line * n, inverse);
  });
  // Axis 1 (stride n): gather into a scratch line per transform.
  parallel_for(0, n * n, [&](std::size_t lo, std::size_t hi) {
    std::vector<cplx> line(n);
    for (std::size_t w = lo; w < hi; ++w) {
      const std::size_t i0 = w / n, i2 = w % n;
      for (std::size_t i1 = 0; i1 < n; ++i1) line[i1] = vol[idx(i0, i1, i2)];
      plan.run(line.data(), inverse);
      for (std::size_t i1 = 0; i1 < n; ++i1) vol[idx(i0, i1, i2)] = line[i1];
    }
  });
  // Axis 0 (stride n^2).
  parallel_for(0, n * n, [&](std::size_t lo, std::size_t hi) {
    std::vector<cplx> line(n);
    for (std::size_t w = lo; w < hi; ++w) {
      const std::size_t i1 = w / n, i2 = w % n;
      for (std::size_t i0 = 0; i0 < n; ++i0) line[i0] = vol[idx(i0, i1, i2)];
      plan.run(line.data(), inverse);
      for (std::size_t i0 = 0; i0 < n; ++i0) vol[idx(i0, i1, i2)] = line[i0];
    }
  });
}

}  // namespace amol
