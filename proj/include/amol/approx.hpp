#pragma once

// N-term approximation, weak-lp diagnostics and rate fitting.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "amol/core.hpp"
#include "amol/frame3d.hpp"
#include "json.hpp"

namespace amol {

/// Weak-lp quasi-norm: max over n of n^{1/p} c*_n after a descending sort of
/// the magnitudes.
inline double weak_lp_norm(std::vector<double> mags, double p) {
  if (p <= 0.0) throw std::domain_error("weak_lp_norm: p must be positive");
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double m = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i)
    m = std::max(m, std::pow(static_cast<double>(i + 1), 1.0 / p) * mags[i]);
  return m;
}

struct NTermPoint {
  std::size_t N = 0;
  double err2 = 0.0;   // ||f - f_N||_2^2 by explicit synthesis
  double tail2 = 0.0;  // sum of discarded |c|^2
  double cstar = 0.0;  // N-th largest coefficient magnitude
};

struct NTermCurve {
  std::vector<NTermPoint> points;
  double f_norm2 = 0.0;        // ||f||_2^2
  double coeff_energy = 0.0;   // sum |c|^2 over all coefficients

  nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points)
      pts.push_back({{"N", p.N}, {"err2", p.err2}, {"tail2", p.tail2},
                     {"cstar", p.cstar}});
    return nlohmann::json{
        {"points", pts}, {"f_norm2", f_norm2}, {"coeff_energy", coeff_energy}};
  }
};

/// CSV: "N,err2,tail2,cstar".
inline void save_nterm_csv(const NTermCurve& c, std::ostream& os) {
  os << "N,err2,tail2,cstar\n";
  char line[160];
  for (const auto& p : c.points) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g\n", p.N, p.err2, p.tail2,
                  p.cstar);
    os << line;
  }
}

/// Top-N curve: one streaming analysis keeping max(Ns) coefficients, then an
/// explicit synthesis per N. Ns exceeding the total count are clamped.
inline NTermCurve nterm_curve(const SampledVolume& f, const ShFrame& frame,
                              std::vector<std::size_t> Ns) {
  if (Ns.empty()) throw std::invalid_argument("nterm_curve: empty N list");
  if (!std::is_sorted(Ns.begin(), Ns.end()))
    throw std::invalid_argument("nterm_curve: Ns must be increasing");
  const std::size_t total =
      frame.window_count() * frame.spec().n * frame.spec().n * frame.spec().n;
  for (auto& N : Ns) N = std::min(N, total);

  const CoefficientSet top = analysis(f, frame, KeepPolicy::TopN(Ns.back()));

  NTermCurve curve;
  curve.f_norm2 = f.norm2();
  curve.f_norm2 *= curve.f_norm2;
  curve.coeff_energy = top.total_energy;

  double kept_energy = 0.0;
  std::size_t cursor = 0;
  for (std::size_t N : Ns) {
    while (cursor < N && cursor < top.entries.size()) {
      kept_energy += std::norm(top.entries[cursor].value);
      ++cursor;
    }
    CoefficientSet prefix;
    prefix.frame = top.frame;
    prefix.truncated = true;
    prefix.entries.assign(top.entries.begin(), top.entries.begin() + cursor);

    const SampledVolume rec = synthesis(prefix, frame);
    double err2 = 0.0;
    for (std::size_t i = 0; i < f.data.size(); ++i)
      err2 += std::norm(f.data[i] - rec.data[i]);

    NTermPoint pt;
    pt.N = cursor;
    pt.err2 = err2;
    pt.tail2 = std::max(0.0, top.total_energy - kept_energy);
    pt.cstar = cursor > 0 ? std::abs(top.entries[cursor - 1].value) : 0.0;
    curve.points.push_back(pt);
  }
  return curve;
}

struct RateFit {
  double exponent = 0.0;
  double r2 = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"exponent", exponent}, {"r2", r2}};
  }
};

/// Least-squares slope of log(value) vs log(N) over N in [n_lo, n_hi].
inline RateFit rate_fit(const std::vector<std::pair<std::size_t, double>>& table,
                        std::size_t n_lo, std::size_t n_hi) {
  std::vector<double> lx, ly;
  for (const auto& [N, v] : table) {
    if (N < n_lo || N > n_hi) continue;
    if (v <= 0.0) throw std::domain_error("rate_fit: degenerate (non-positive) value");
    lx.push_back(std::log(static_cast<double>(N)));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 4) throw std::invalid_argument("rate_fit: need >= 4 points in range");
  const LineFit f = fit_line(lx, ly);
  return RateFit{f.slope, f.r2};
}

}  // namespace amol
