#pragma once

// Small shared utilities: dense d-dimensional vectors/matrices (d is tiny,
// typically 2..6), a thread helper honoring AMOL_THREADS, and least-squares
// fitting used by the rate/decay diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace amol {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

/// Analyst's bracket <x> = sqrt(1 + x^2).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

// ---------------------------------------------------------------------------
// Dense vector / matrix in dimension d (row-major). No expression templates;
// these never appear in per-sample hot loops.
// ---------------------------------------------------------------------------

using VecD = std::vector<double>;

inline double dot(const VecD& a, const VecD& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const VecD& a) { return std::sqrt(dot(a, a)); }

inline VecD operator-(const VecD& a, const VecD& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vec-: dimension mismatch");
  VecD r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline VecD operator+(const VecD& a, const VecD& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vec+: dimension mismatch");
  VecD r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline VecD operator*(double c, const VecD& a) {
  VecD r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

/// |(x_1,...,x_{d-1},0)|_2 — the norm of all but the last component.
inline double norm_head(const VecD& a) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

inline VecD unit_vector(std::size_t d, std::size_t axis) {
  VecD e(d, 0.0);
  e.at(axis) = 1.0;
  return e;
}

class MatD {
 public:
  MatD() = default;
  MatD(std::size_t rows, std::size_t cols, double fill = 0.0)
      : r_(rows), c_(cols), a_(rows * cols, fill) {}

  static MatD identity(std::size_t d) {
    MatD m(d, d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }

  static MatD diag(const VecD& v) {
    MatD m(v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) m(i, i) = v[i];
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }

  MatD transposed() const {
    MatD t(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  VecD operator*(const VecD& v) const {
    if (v.size() != c_) throw std::invalid_argument("mat*vec: dimension mismatch");
    VecD r(r_, 0.0);
    for (std::size_t i = 0; i < r_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c_; ++j) s += (*this)(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }

  MatD operator*(const MatD& o) const {
    if (c_ != o.r_) throw std::invalid_argument("mat*mat: dimension mismatch");
    MatD r(r_, o.c_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t k = 0; k < c_; ++k) {
        const double v = (*this)(i, k);
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < o.c_; ++j) r(i, j) += v * o(k, j);
      }
    return r;
  }

  /// Gauss-Jordan inverse; the matrices here are small and well conditioned.
  MatD inverse() const {
    if (r_ != c_) throw std::invalid_argument("inverse: not square");
    const std::size_t n = r_;
    MatD a = *this, inv = identity(n);
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t i = col + 1; i < n; ++i)
        if (std::fabs(a(i, col)) > std::fabs(a(piv, col))) piv = i;
      if (a(piv, col) == 0.0) throw std::domain_error("inverse: singular matrix");
      if (piv != col)
        for (std::size_t j = 0; j < n; ++j) {
          std::swap(a(col, j), a(piv, j));
          std::swap(inv(col, j), inv(piv, j));
        }
      const double d = a(col, col);
      for (std::size_t j = 0; j < n; ++j) {
        a(col, j) /= d;
        inv(col, j) /= d;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (i == col) continue;
        const double f = a(i, col);
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          a(i, j) -= f * a(col, j);
          inv(i, j) -= f * inv(col, j);
        }
      }
    }
    return inv;
  }

  /// Spectral norm via power iteration on M^T M.
  double operator_norm() const {
    const MatD g = transposed() * (*this);
    VecD v(g.rows(), 1.0);
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
      VecD w = g * v;
      const double n = norm2(w);
      if (n == 0.0) return 0.0;
      for (auto& x : w) x /= n;
      const double next = dot(w, g * w);
      if (std::fabs(next - lam) <= 1e-14 * std::max(1.0, next) && it > 4) {
        lam = next;
        break;
      }
      lam = next;
      v = std::move(w);
    }
    return std::sqrt(std::max(0.0, lam));
  }

 private:
  std::size_t r_ = 0, c_ = 0;
  std::vector<double> a_;
};

// ---------------------------------------------------------------------------
// Threading
// ---------------------------------------------------------------------------

/// Worker count: min(hardware, AMOL_THREADS if set).
inline unsigned worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("AMOL_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return hw;
}

/// Runs fn(begin..end) split into contiguous chunks across workers.
inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t total = end > begin ? end - begin : 0;
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(worker_count(), std::max<std::size_t>(total, 1)));
  if (workers <= 1 || total < 2) {
    if (total > 0) fn(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (total + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    if (lo >= end) break;
    const std::size_t hi = std::min(end, lo + chunk);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Least squares y = a + b x
// ---------------------------------------------------------------------------

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::domain_error("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace amol
