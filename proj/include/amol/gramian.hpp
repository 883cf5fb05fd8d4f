#pragma once

// Cross-Gramian assembly between SH atom systems, decay-envelope fitting
// against omega_alpha, and Schur-bound sparsity-equivalence diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "amol/core.hpp"
#include "amol/fft.hpp"
#include "amol/frame3d.hpp"
#include "amol/metric.hpp"
#include "json.hpp"

namespace amol {

struct GramianRow {
  ShearletIndex a;
  ShearletIndex b;
  cplx value;
  double omega = 1.0;
};

struct GramianTable {
  std::vector<GramianRow> rows;
};

/// CSV: "a_eps,a_j,a_l1,a_l2,a_k1,a_k2,a_k3,b_eps,b_j,b_l1,b_l2,b_k1,b_k2,b_k3,re,im,omega".
inline void save_gramian_csv(const GramianTable& t, std::ostream& os) {
  os << "a_eps,a_j,a_l1,a_l2,a_k1,a_k2,a_k3,"
        "b_eps,b_j,b_l1,b_l2,b_k1,b_k2,b_k3,re,im,omega\n";
  char line[512];
  for (const auto& r : t.rows) {
    std::snprintf(line, sizeof(line),
                  "%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%.17g,%.17g,%.17g\n",
                  r.a.eps, r.a.j, r.a.ell[0], r.a.ell[1], r.a.k[0], r.a.k[1], r.a.k[2],
                  r.b.eps, r.b.j, r.b.ell[0], r.b.ell[1], r.b.k[0], r.b.k[1], r.b.k[2],
                  r.value.real(), r.value.imag(), r.omega);
    os << line;
  }
}

struct PairSampler {
  std::size_t count = 500;
  std::uint64_t seed = 0;
  int max_shift = 2;  // translation gap per axis
};

namespace detail {

inline ShearletIndex random_sh_index(std::mt19937_64& rng, int J) {
  std::uniform_int_distribution<int> jd(0, J);
  std::uniform_int_distribution<int> ed(1, 3);
  const int j = jd(rng);
  const int eps = ed(rng);
  const auto set = SamplingData::sh_shear_set(eps, j);
  std::uniform_int_distribution<std::size_t> ld(0, set.size() - 1);
  const auto l = set[ld(rng)];
  return ShearletIndex{eps, j, {l[0], l[1]}, {0, 0, 0}};
}

}  // namespace detail

/// Stratified sample of SH atom pairs with quadrature inner products and
/// omega from the SH phase map. Strata sweep scale gaps {0,1,2}, shear gaps,
/// pyramid changes and translation gaps; deterministic per seed.
inline GramianTable cross_gramian(const FrameSpec& spec, const PairSampler& sampler,
                                  double alpha = 0.5) {
  spec.validate();
  if (sampler.count == 0) throw std::invalid_argument("cross_gramian: empty sample");
  std::mt19937_64 rng(sampler.seed);

  std::vector<std::pair<ShearletIndex, ShearletIndex>> pairs;
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> kd(-sampler.max_shift, sampler.max_shift);
  std::uniform_int_distribution<int> dj(0, 2);
  while (pairs.size() < sampler.count) {
    ShearletIndex a = detail::random_sh_index(rng, spec.J);
    ShearletIndex b;
    const int stratum = static_cast<int>(pairs.size() % 5);
    switch (stratum) {
      case 0: {  // same window, translation gap only
        b = a;
        break;
      }
      case 1: {  // shear gap within the pyramid
        b = a;
        const auto set = SamplingData::sh_shear_set(a.eps, a.j);
        std::uniform_int_distribution<std::size_t> ld(0, set.size() - 1);
        const auto l = set[ld(rng)];
        b.ell = {l[0], l[1]};
        break;
      }
      case 2: {  // scale gap |j - j'| in {1, 2}
        b = detail::random_sh_index(rng, spec.J);
        const int gap = 1 + coin(rng);
        b.j = std::min(spec.J, std::max(0, a.j + (coin(rng) ? gap : -gap)));
        {
          const auto set = SamplingData::sh_shear_set(b.eps, b.j);
          std::uniform_int_distribution<std::size_t> ld(0, set.size() - 1);
          const auto l = set[ld(rng)];
          b.ell = {l[0], l[1]};
        }
        break;
      }
      case 3: {  // pyramid change at equal scale
        b = detail::random_sh_index(rng, spec.J);
        b.j = a.j;
        b.eps = a.eps % 3 + 1;
        {
          const auto set = SamplingData::sh_shear_set(b.eps, b.j);
          std::uniform_int_distribution<std::size_t> ld(0, set.size() - 1);
          const auto l = set[ld(rng)];
          b.ell = {l[0], l[1]};
        }
        break;
      }
      default: {  // free pair
        b = detail::random_sh_index(rng, spec.J);
        break;
      }
    }
    a.k = {kd(rng), kd(rng), kd(rng)};
    b.k = {kd(rng), kd(rng), kd(rng)};
    pairs.emplace_back(a, b);
  }

  GramianTable table;
  table.rows.resize(pairs.size());
  // inner_product parallelizes internally; iterate pairs serially to keep the
  // per-pair thread fan-out bounded.
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    GramianRow row;
    row.a = a;
    row.b = b;
    row.value = inner_product(a, b, spec);
    row.omega = omega_alpha(phase_SH(a, alpha), phase_SH(b, alpha), alpha);
    table.rows[i] = row;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Decay-envelope fit
// ---------------------------------------------------------------------------

struct DecayFit {
  double C = 0.0;
  double slope = 0.0;
  double r2 = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"C", C}, {"slope", slope}, {"r2", r2}};
  }
};

/// Least-squares fit of log|value| vs log(omega) over the upper envelope:
/// the max |value| per logarithmic omega bin (8 bins per decade), plotted at
/// the omega of the bin maximum. Zero rows and rows below omega_min are
/// excluded.
inline DecayFit decay_fit(const GramianTable& t, double omega_min,
                          double abs_floor = 0.0) {
  std::vector<std::pair<double, double>> pts;  // (omega, |value|)
  for (const auto& r : t.rows) {
    const double v = std::abs(r.value);
    if (r.omega >= omega_min && v > abs_floor) pts.emplace_back(r.omega, v);
  }
  if (pts.size() < 20)
    throw std::invalid_argument("decay_fit: need >= 20 rows with omega >= omega_min");

  std::map<long, std::pair<double, double>> bins;  // bin -> (omega, value) of max
  for (const auto& [om, v] : pts) {
    const long bin = std::lround(std::floor(std::log10(om) * 8.0));
    auto it = bins.find(bin);
    if (it == bins.end() || v > it->second.second) bins[bin] = {om, v};
  }
  if (bins.size() < 2) throw std::invalid_argument("decay_fit: not enough omega bins");

  std::vector<double> lx, ly;
  for (const auto& [bin, pv] : bins) {
    lx.push_back(std::log(pv.first));
    ly.push_back(std::log(pv.second));
  }
  const LineFit f = fit_line(lx, ly);
  return DecayFit{std::exp(f.intercept), f.slope, f.r2};
}

// ---------------------------------------------------------------------------
// Sparsity-equivalence diagnostics
// ---------------------------------------------------------------------------

struct SparsityDiag {
  std::vector<double> bounds;  // Schur bound per nested truncation level
  double schur_bound = 0.0;    // last level
  bool stable = false;         // last two levels differ by < 5%
};

namespace detail {

inline std::int64_t sh_row_id(const ShearletIndex& idx) {
  // Compact injective encoding for Schur bookkeeping at desk scales.
  std::int64_t h = idx.eps;
  h = h * 16 + idx.j;
  h = h * 1024 + (idx.ell[0] + 512);
  h = h * 1024 + (idx.ell[1] + 512);
  for (int c : idx.k) h = h * 4096 + (c + 2048);
  return h;
}

}  // namespace detail

/// Schur bounds over explicit nested sub-tables: level t keeps rows whose
/// scales are both <= levels[t]. Stability = last two bounds within 5%.
inline SparsityDiag sparsity_equiv_diag(const std::vector<GramianTable>& nested,
                                        double p) {
  if (nested.size() < 2)
    throw std::invalid_argument("sparsity_equiv_diag: need >= 2 truncation levels");
  SparsityDiag d;
  for (const auto& t : nested) {
    std::vector<SchurEntry> entries;
    entries.reserve(t.rows.size());
    for (const auto& r : t.rows)
      entries.push_back({detail::sh_row_id(r.a), detail::sh_row_id(r.b), r.value});
    d.bounds.push_back(schur_lp_bound(entries, p));
  }
  d.schur_bound = d.bounds.back();
  const double prev = d.bounds[d.bounds.size() - 2];
  d.stable = prev > 0.0 && std::fabs(d.schur_bound - prev) / prev < 0.05;
  return d;
}

/// Digital SH self-Gramian Schur diagnostic, streaming over window pairs.
/// Translate inner products are samples of one inverse FFT per window pair
/// (<psi_{a,k}, psi_{b,k'}> = IDFT(w_a w_b)[k - k']), so row sums over nested
/// translation ranges |dk|_inf <= K come out without materializing a table.
inline SparsityDiag sh_schur_digital(const ShFrame& frame, double p,
                                     const std::vector<int>& k_levels) {
  if (k_levels.size() < 2)
    throw std::invalid_argument("sh_schur_digital: need >= 2 truncation levels");
  const double q = std::min(1.0, p);
  const std::size_t n = frame.spec().n, n3 = n * n * n;
  const std::size_t W = frame.window_count();

  // row_sum[level][w] accumulates sum over windows w' and |dk| <= K of
  // |H_{w,w'}[dk]|^q; by translation invariance this is the Schur row sum of
  // every translate of w.
  std::vector<std::vector<double>> row_sum(k_levels.size(),
                                           std::vector<double>(W, 0.0));

  // Only window pairs whose supports can meet: scales within one step
  // (coarse pairs only with scale 0) and angular cells adjacent in some
  // shared pyramid.
  const auto overlap_possible = [&](const WindowKey& ka, const WindowKey& kb) {
    const int ja = ka.eps == 0 ? -1 : ka.j;
    const int jb = kb.eps == 0 ? -1 : kb.j;
    if (std::abs(ja - jb) >= 2) return false;
    if (ka.eps == 0 || kb.eps == 0) return true;
    const double ta = 1 << ka.j, tb = 1 << kb.j;
    for (const auto& pa : detail::atom_pieces(ka))
      for (const auto& pb : detail::atom_pieces(kb)) {
        if (pa.p != pb.p) continue;
        const bool o1 = (pa.c1 - 1) / ta < (pb.c1 + 1) / tb &&
                        (pb.c1 - 1) / tb < (pa.c1 + 1) / ta;
        const bool o2 = (pa.c2 - 1) / ta < (pb.c2 + 1) / tb &&
                        (pb.c2 - 1) / tb < (pa.c2 + 1) / ta;
        if (o1 && o2) return true;
      }
    return false;
  };
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t a = 0; a < W; ++a)
    for (std::size_t b = a; b < W; ++b)
      if (overlap_possible(frame.keys()[a], frame.keys()[b])) jobs.emplace_back(a, b);

  std::mutex merge;
  parallel_for(0, jobs.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<cplx> buf(n3);
    std::vector<std::vector<double>> local(k_levels.size(),
                                           std::vector<double>(W, 0.0));
    for (std::size_t jb = lo; jb < hi; ++jb) {
      const auto [a, b] = jobs[jb];
      const auto& wa = frame.window(a);
      const auto& wb = frame.window(b);
      // Sparse product w_a * w_b; skip disjoint pairs cheaply.
      std::fill(buf.begin(), buf.end(), cplx{0.0, 0.0});
      std::size_t ia = 0, ib = 0, hits = 0;
      while (ia < wa.idx.size() && ib < wb.idx.size()) {
        if (wa.idx[ia] < wb.idx[ib]) {
          ++ia;
        } else if (wb.idx[ib] < wa.idx[ia]) {
          ++ib;
        } else {
          buf[wa.idx[ia]] = wa.val[ia] * wb.val[ib];
          ++ia;
          ++ib;
          ++hits;
        }
      }
      if (hits == 0) continue;
      fft_3d(buf, n, true);
      for (std::size_t lev = 0; lev < k_levels.size(); ++lev) {
        const int K = k_levels[lev];
        double s = 0.0;
        const int ni = static_cast<int>(n);
        for (int d0 = -K; d0 <= K; ++d0)
          for (int d1 = -K; d1 <= K; ++d1)
            for (int d2 = -K; d2 <= K; ++d2) {
              const std::size_t i0 = static_cast<std::size_t>((d0 + ni) % ni);
              const std::size_t i1 = static_cast<std::size_t>((d1 + ni) % ni);
              const std::size_t i2 = static_cast<std::size_t>((d2 + ni) % ni);
              const double m = std::abs(buf[(i0 * n + i1) * n + i2]);
              if (m > 0.0) s += std::pow(m, q);
            }
        local[lev][a] += s;
        if (b != a) local[lev][b] += s;
      }
    }
    std::lock_guard<std::mutex> lock(merge);
    for (std::size_t lev = 0; lev < k_levels.size(); ++lev)
      for (std::size_t w = 0; w < W; ++w) row_sum[lev][w] += local[lev][w];
  });

  SparsityDiag d;
  for (std::size_t lev = 0; lev < k_levels.size(); ++lev) {
    double m = 0.0;
    for (double s : row_sum[lev]) m = std::max(m, s);
    d.bounds.push_back(std::pow(m, 1.0 / q));
  }
  d.schur_bound = d.bounds.back();
  const double prev = d.bounds[d.bounds.size() - 2];
  d.stable = prev > 0.0 && std::fabs(d.schur_bound - prev) / prev < 0.05;
  return d;
}

}  // namespace amol
