#pragma once

// The alpha-scaled index distance omega_alpha, the distance kernel d_alpha,
// truncated (alpha,k)-consistency sums and the Schur l^p operator bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "amol/core.hpp"
#include "amol/geometry.hpp"
#include "amol/parametrization.hpp"
#include "json.hpp"

namespace amol {

/// d_alpha(p,q) = s0^{2a}|x_p - x_q|^2 + s0^{2(1-a)}|{d_S(e_p,e_q)}|^2
///              + s0 |<e_p, x_p - x_q>| with s0 = min(s_p, s_q).
inline double d_alpha(const PhasePoint& p, const PhasePoint& q, double alpha) {
  if (p.dim() != q.dim()) throw std::invalid_argument("d_alpha: dimension mismatch");
  const double s0 = std::min(p.s, q.s);
  const VecD dx = p.x - q.x;
  const double ang = project_angle(std::acos(clamp_inner(dot(p.e, q.e))));
  return std::pow(s0, 2.0 * alpha) * dot(dx, dx) +
         std::pow(s0, 2.0 * (1.0 - alpha)) * ang * ang + s0 * std::fabs(dot(p.e, dx));
}

/// omega_alpha(p,q) = max(s_p/s_q, s_q/s_p) (1 + d_alpha(p,q)) >= 1.
inline double omega_alpha(const PhasePoint& p, const PhasePoint& q, double alpha) {
  const double ratio = p.s >= q.s ? p.s / q.s : q.s / p.s;
  return ratio * (1.0 + d_alpha(p, q, alpha));
}

// ---------------------------------------------------------------------------
// Schur l^p bound on an explicit sparse table
// ---------------------------------------------------------------------------

struct SchurEntry {
  std::int64_t row = 0;
  std::int64_t col = 0;
  cplx value;
};

/// max( sup_row sum |a|^q, sup_col sum |a|^q )^{1/q}, q = min(1,p).
inline double schur_lp_bound(const std::vector<SchurEntry>& table, double p) {
  if (p <= 0.0) throw std::domain_error("schur_lp_bound: p must be positive");
  const double q = std::min(1.0, p);
  std::map<std::int64_t, double> rows, cols;
  for (const auto& e : table) {
    const double a = std::pow(std::abs(e.value), q);
    rows[e.row] += a;
    cols[e.col] += a;
  }
  double m = 0.0;
  for (const auto& [id, s] : rows) m = std::max(m, s);
  for (const auto& [id, s] : cols) m = std::max(m, s);
  return std::pow(m, 1.0 / q);
}

// ---------------------------------------------------------------------------
// (alpha,k)-consistency
// ---------------------------------------------------------------------------

struct ConsistencyTruncation {
  int j_max = 5;
  int k_max = 16;
  int probe_count = 32;
};

struct ConsistencyReport {
  double k = 0.0;
  double alpha = 0.5;
  double sup_estimate = 0.0;
  std::vector<double> increments;  // sup estimate per nested truncation level
  bool converged = false;
  double tail_bound = 0.0;  // geometric extrapolation when converged

  nlohmann::json to_json() const {
    return nlohmann::json{{"k", k},           {"alpha", alpha},
                          {"sup_estimate", sup_estimate},
                          {"increments", increments},
                          {"converged", converged},
                          {"tail_bound", tail_bound}};
  }
};

/// Brute-force sup over B of sum over A of omega^{-k}; the oracle route for
/// explicit point sets (also covers the single-index case).
inline double consistency_sum_points(const std::vector<PhasePoint>& A,
                                     const std::vector<PhasePoint>& B, double alpha,
                                     double k_exp) {
  if (A.empty() || B.empty())
    throw std::invalid_argument("consistency_sum_points: empty enumeration");
  double sup = 0.0;
  for (const auto& mu : B) {
    double s = 0.0;
    for (const auto& lam : A) s += std::pow(omega_alpha(lam, mu, alpha), -k_exp);
    sup = std::max(sup, s);
  }
  return sup;
}

namespace detail {

inline double ipow(double x, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

/// base^{-k} with an integer fast path (base >= 1 in all call sites).
inline double inv_pow(double base, double k_exp) {
  const int ki = static_cast<int>(k_exp);
  if (static_cast<double>(ki) == k_exp && ki >= 1 && ki <= 16)
    return ipow(1.0 / base, ki);
  return std::pow(base, -k_exp);
}

/// Deterministic stratified probes over an SH-style system: per scale a
/// pyramid mix, central and extreme shears, origin and boundary translations,
/// plus two coarse probes.
inline std::vector<ShearletIndex> stratified_probes(const SamplingData& D, int j_max,
                                                    int k_max, int max_count) {
  std::vector<ShearletIndex> out;
  out.push_back(ShearletIndex{0, 0, {0, 0}, {0, 0, 0}});
  out.push_back(ShearletIndex{0, 0, {0, 0}, {k_max, k_max, k_max}});
  for (int j = 0; j <= j_max; ++j) {
    const int b = 1 << j;
    out.push_back(ShearletIndex{1, j, {0, 0}, {0, 0, 0}});
    out.push_back(ShearletIndex{3, j, {b, b > 1 ? b - 1 : 0}, {0, 0, 0}});
    out.push_back(ShearletIndex{2, j, {0, 0}, {k_max, k_max, k_max}});
    out.push_back(ShearletIndex{3, j, {-b, 0}, {0, k_max, -k_max}});
  }
  if (static_cast<int>(out.size()) > max_count) out.resize(max_count);
  for (const auto& idx : out)
    if (!index_valid(idx, D))
      throw std::logic_error("stratified_probes: generated invalid probe");
  return out;
}

/// One probe's truncated sum over the lambda system (d = 3). Pyramid blocks,
/// shears and translation slabs are pruned with rigorous upper bounds whose
/// mass is charged against a global budget of rel_tol * max(total, 1), so the
/// result underestimates the exact truncated sum by at most that amount;
/// everything surviving is summed exactly.
inline double probe_sum_sh3(const SamplingData& A, double alpha, double k_exp,
                            const PhasePoint& mu, int j_max, int k_max,
                            double rel_tol = 2e-3) {
  const double sigma = A.sigma;
  const int nk = 2 * k_max + 1;
  const double nk1 = nk, nk2 = nk1 * nk1;
  double total = 0.0;

  // Coarse block: s = 1, e = e_3, x = T k (no pruning, it is a single block).
  {
    const double scale_fac = std::max(mu.s, 1.0 / mu.s);
    const double pref = inv_pow(scale_fac, k_exp);
    const double s0 = std::min(1.0, mu.s);
    const double csp = std::pow(s0, 2.0 * alpha);
    const double cdir = s0;
    const double ang = project_angle(std::acos(clamp_inner(mu.e[2])));
    const double cang = std::pow(s0, 2.0 * (1.0 - alpha)) * ang * ang;
    for (int k1 = -k_max; k1 <= k_max; ++k1) {
      const double m1 = A.tau[0] * k1 - mu.x[0];
      for (int k2 = -k_max; k2 <= k_max; ++k2) {
        const double m2 = A.tau[1] * k2 - mu.x[1];
        const double c12 = cang + csp * (m1 * m1 + m2 * m2);
        for (int k3 = -k_max; k3 <= k_max; ++k3) {
          const double m3 = A.tau[2] * k3 - mu.x[2];
          total += pref * inv_pow(1.0 + c12 + csp * m3 * m3 + cdir * std::fabs(m3),
                                  k_exp);
        }
      }
    }
  }

  // Directional scales, farthest |j - j_mu| first: the coarse block above
  // already seeded the running total, and the distant blocks are the ones the
  // budget should retire before the near blocks start charging slab breaks.
  const double j_mu = std::log(mu.s) / std::log(sigma);
  std::vector<int> scales(j_max + 1);
  for (int j = 0; j <= j_max; ++j) scales[j] = j;
  std::sort(scales.begin(), scales.end(), [&](int a, int b) {
    return std::fabs(a - j_mu) > std::fabs(b - j_mu);
  });

  // Global pruning budget: every skipped block/shear/slab/row is charged its
  // rigorous upper bound, and skips happen only while the charged mass stays
  // below rel_tol * max(total, 1). Bounds below a floor are free (their count
  // is capped so the free mass stays below one budget as well); the total
  // shortfall is therefore at most 2 * rel_tol * max(total, 1).
  double forfeit = 0.0;
  long free_skips = 0;
  constexpr long free_cap = 300000;
  const auto can_forfeit = [&](double bound) {
    const double budget = rel_tol * std::max(total, 1.0);
    if (bound < budget / static_cast<double>(free_cap) && free_skips < free_cap) {
      ++free_skips;
      return true;
    }
    if (forfeit + bound <= budget) {
      forfeit += bound;
      return true;
    }
    return false;
  };

  for (int j : scales) {
    const double s = std::pow(sigma, j);
    const double scale_fac = std::max(s / mu.s, mu.s / s);
    const double pref = inv_pow(scale_fac, k_exp);
    const double etaj = A.eta(j);
    const double s0 = std::min(s, mu.s);
    const double csp = std::pow(s0, 2.0 * alpha);
    const double ca = std::pow(s0, 2.0 * (1.0 - alpha));
    const double cdir = s0;
    const double sa = std::pow(s, -alpha);

    for (int eps = 1; eps <= 3; ++eps) {
      const VecD emu = apply_cyclic(mu.e, -eps);
      const VecD xmu = apply_cyclic(mu.x, -eps);
      const VecD taur = apply_cyclic(A.tau, -eps);
      const double t1 = taur[0] * sa, t2 = taur[1] * sa, t3 = taur[2] / s;

      const auto shears = A.shear_sets(eps, j);
      const double n_ell = static_cast<double>(shears.size());

      // Cheap pre-test with every factor bounded by 1.
      if (can_forfeit(pref * n_ell * nk2 * nk1)) continue;

      // Per-shear k-sum bound: the (k1,k2) lattice sum of
      // (1+cang+csp(m1^2+m2^2))^{-k} is at most 9 values at the minimum plus
      // the closed-form radial integral (valid since the summand decreases
      // radially), and the k3 axis contributes at most nk flat.
      double rowcap = 0.0;  // exact sum_k2 (1+csp m2^2)^{-k/2} * nk
      for (int k2 = -k_max; k2 <= k_max; ++k2) {
        const double m2 = t2 * k2 - xmu[1];
        rowcap += inv_pow(1.0 + csp * m2 * m2, k_exp / 2.0);
      }
      rowcap *= nk1;
      const double c2int = k_exp > 1.01
                               ? pi / (t1 * t2 * csp * (k_exp - 1.0))
                               : std::numeric_limits<double>::infinity();
      const auto ell_bound_of = [&](double cang) {
        const double flat = inv_pow(1.0 + cang, k_exp) * nk2;
        const double lattice =
            9.0 * inv_pow(1.0 + cang, k_exp) + c2int * inv_pow(1.0 + cang, k_exp - 1.0);
        return pref * nk1 * std::min(flat, lattice);
      };

      std::vector<double> cang_list(shears.size());
      double block_bound = 0.0;
      for (std::size_t li = 0; li < shears.size(); ++li) {
        const double h1 = etaj * shears[li][0], h2 = etaj * shears[li][1];
        const double nl = 1.0 / std::sqrt(1.0 + h1 * h1 + h2 * h2);
        const double ce = clamp_inner(nl * (h1 * emu[0] + h2 * emu[1] + emu[2]));
        const double ang = project_angle(std::acos(ce));
        cang_list[li] = ca * ang * ang;
        block_bound += ell_bound_of(cang_list[li]);
      }
      if (can_forfeit(block_bound)) continue;

      std::vector<double> k3_quad(static_cast<std::size_t>(nk));
      std::vector<double> k3_lin(static_cast<std::size_t>(nk));
      for (std::size_t li = 0; li < shears.size(); ++li) {
        if (can_forfeit(ell_bound_of(cang_list[li]))) continue;

        const double h1 = etaj * shears[li][0], h2 = etaj * shears[li][1];
        const double nl = 1.0 / std::sqrt(1.0 + h1 * h1 + h2 * h2);
        const double cang = cang_list[li];
        // <e_lambda, x_lambda - x_mu> = nl (t3 k3 - proj_mu) since
        // S^{-T}_h (h,1)^T = e_3.
        const double proj_mu = h1 * xmu[0] + h2 * xmu[1] + xmu[2];
        // Hoist the k3-only parts: csp (t3 k3)^2 + cdir nl |t3 k3 - proj|.
        for (int k3 = -k_max; k3 <= k_max; ++k3) {
          const double tk = t3 * k3;
          k3_quad[k3 + k_max] = csp * tk * tk + cdir * nl * std::fabs(tk - proj_mu);
          k3_lin[k3 + k_max] = 2.0 * csp * tk;
        }

        // Expand k1 outward from the slab minimizer: along the direction the
        // profile (1+g)^{-q} decays convexly, so the tail mass is at most the
        // current value times 1 + I_q * sqrt((1+g)/curvature) lattice steps
        // (I_q = integral of (1+x^2)^{-q}, bounded by pi for q >= 1; for
        // q <= 3/4 the flat count is used instead).
        const auto tail_count = [&](double q, double onepg, double curv,
                                    double remaining) {
          if (q <= 0.75 || curv <= 0.0) return remaining;
          return std::min(remaining, 1.0 + pi * std::sqrt(onepg / curv));
        };
        const double curv1 = csp * t1 * t1, curv2 = csp * t2 * t2;

        const int k1c = std::clamp(static_cast<int>(std::lround(xmu[0] / t1)),
                                   -k_max, k_max);
        for (int dir1 = 0; dir1 < 2; ++dir1) {
          const int step1 = dir1 == 0 ? 1 : -1;
          for (int k1 = dir1 == 0 ? k1c : k1c - 1; k1 >= -k_max && k1 <= k_max;
               k1 += step1) {
            const double m1 = t1 * k1 - xmu[0];
            const double g1 = cang + csp * m1 * m1;
            const double remaining1 = dir1 == 0 ? k_max - k1 + 1 : k1 + k_max + 1;
            if (can_forfeit(pref * inv_pow(1.0 + g1, k_exp / 2.0) * rowcap *
                            tail_count(k_exp / 2.0, 1.0 + g1, curv1, remaining1)))
              break;

            const int k2c = std::clamp(static_cast<int>(std::lround(xmu[1] / t2)),
                                       -k_max, k_max);
            for (int dir2 = 0; dir2 < 2; ++dir2) {
              const int step2 = dir2 == 0 ? 1 : -1;
              for (int k2 = dir2 == 0 ? k2c : k2c - 1; k2 >= -k_max && k2 <= k_max;
                   k2 += step2) {
                const double m2 = t2 * k2 - xmu[1];
                const double g2 = g1 + csp * m2 * m2;
                const double remaining2 = dir2 == 0 ? k_max - k2 + 1 : k2 + k_max + 1;
                if (can_forfeit(pref * inv_pow(1.0 + g2, k_exp) * nk1 *
                                tail_count(k_exp, 1.0 + g2, curv2, remaining2)))
                  break;

                const double base3 = -h1 * t1 * k1 - h2 * t2 * k2 - xmu[2];
                const double g2b = 1.0 + g2 + csp * base3 * base3;
                const int ki = static_cast<int>(k_exp);
                if (static_cast<double>(ki) == k_exp && ki >= 1 && ki <= 16) {
                  double acc = 0.0;
                  for (int t = 0; t < nk; ++t)
                    acc += ipow(1.0 / (g2b + k3_quad[t] + k3_lin[t] * base3), ki);
                  total += pref * acc;
                } else {
                  double acc = 0.0;
                  for (int t = 0; t < nk; ++t)
                    acc += std::pow(g2b + k3_quad[t] + k3_lin[t] * base3, -k_exp);
                  total += pref * acc;
                }
              }
            }
          }
        }
      }
    }
  }
  return total;
}

}  // namespace detail

/// Truncated sup_mu sum_lambda omega_alpha(lambda,mu)^{-k} for two SH-style
/// systems in d = 3 (lambda enumerated from A, probes mu stratified from B;
/// by quasi-symmetry one direction suffices). Levels shrink from
/// (j_max, k_max) through (j-1, k/2); `increments` holds the sup estimate per
/// level and convergence means the level-to-level differences decay by at
/// least a factor 2.
inline ConsistencyReport consistency_sum(const SamplingData& A, const SamplingData& B,
                                         double alpha, double k_exp,
                                         const ConsistencyTruncation& trunc) {
  if (k_exp <= 0.0) throw std::domain_error("consistency_sum: k must be positive");
  if (A.dim() != 3 || B.dim() != 3)
    throw std::invalid_argument("consistency_sum: implemented for d = 3");
  if (trunc.j_max < 1 || trunc.k_max < 1 || trunc.probe_count < 1)
    throw std::invalid_argument("consistency_sum: empty truncation");

  std::vector<std::array<int, 2>> levels;
  {
    int j = trunc.j_max, k = trunc.k_max;
    while (true) {
      levels.push_back({j, k});
      if (j == 1 || k == 1) break;
      j -= 1;
      k /= 2;
    }
    std::reverse(levels.begin(), levels.end());
  }

  const auto probes =
      detail::stratified_probes(B, trunc.j_max, trunc.k_max, trunc.probe_count);
  std::vector<PhasePoint> mu_points;
  mu_points.reserve(probes.size());
  for (const auto& idx : probes) mu_points.push_back(shearlet_phase(idx, B, alpha));

  ConsistencyReport rep;
  rep.k = k_exp;
  rep.alpha = alpha;

  for (const auto& [jl, kl] : levels) {
    std::vector<double> sums(mu_points.size(), 0.0);
    parallel_for(0, mu_points.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        sums[i] = detail::probe_sum_sh3(A, alpha, k_exp, mu_points[i], jl, kl);
    });
    rep.increments.push_back(*std::max_element(sums.begin(), sums.end()));
  }
  rep.sup_estimate = rep.increments.back();

  const std::size_t L = rep.increments.size();
  if (L >= 3) {
    const double d_last = rep.increments[L - 1] - rep.increments[L - 2];
    const double d_prev = rep.increments[L - 2] - rep.increments[L - 3];
    if (d_last <= 0.0) {
      rep.converged = true;
    } else if (d_prev > 0.0 && d_last / d_prev < 0.5) {
      rep.converged = true;
      const double r = d_last / d_prev;
      rep.tail_bound = d_last * r / (1.0 - r);
    }
  } else if (L == 2) {
    rep.converged = rep.increments[1] - rep.increments[0] <= 0.0;
  } else {
    rep.converged = true;
  }
  return rep;
}

}  // namespace amol
