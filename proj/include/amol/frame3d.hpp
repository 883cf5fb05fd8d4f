#pragma once

// The smooth band-limited Parseval frame of 3D shearlets on a digital n^3
// grid: index set, window evaluation for coarse / interior / boundary /
// corner atoms, tightness check, analysis and synthesis transforms, pairwise
// continuum inner products and the SH phase map.
//
// Digital conventions: integer frequencies m in [-n/2, n/2)^3 map to
// continuum xi = m * 4^J / n, so the scale-J corona ends exactly at the
// Nyquist edge; every window uses the full n^3 translation grid and the
// continuum amplitude prefactors collapse into the transform normalization,
// making Parseval a pointwise window identity.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "amol/core.hpp"
#include "amol/fft.hpp"
#include "amol/parametrization.hpp"
#include "amol/windows.hpp"
#include "json.hpp"

namespace amol {

// ---------------------------------------------------------------------------
// Frame specification and volumes
// ---------------------------------------------------------------------------

struct FrameSpec {
  std::size_t n = 64;  // grid size per axis, power of two
  int J = 2;           // maximum scale
  ProfileParams profile{};

  void validate() const {
    if (!is_pow2(n)) throw std::invalid_argument("FrameSpec: n must be a power of two");
    if (J < 0) throw std::invalid_argument("FrameSpec: J must be >= 0");
    // All scale-J windows must fit inside the representable band.
    if ((std::size_t{1} << (2 * (J + 1))) > n)
      throw std::invalid_argument("FrameSpec: band overflow, need 4^(J+1) <= n");
    profile.validate();
  }

  /// Continuum frequency per integer grid step; the scale-J corona sits at
  /// the Nyquist edge.
  double freq_scale() const {
    return static_cast<double>(std::size_t{1} << (2 * J)) / static_cast<double>(n);
  }
};

struct SampledVolume {
  std::size_t n = 0;
  std::vector<cplx> data;  // row-major, last index fastest
  enum class Domain { spatial, frequency } domain = Domain::spatial;
  bool real_valued = true;

  static SampledVolume zeros(std::size_t n, Domain dom = Domain::spatial) {
    SampledVolume v;
    v.n = n;
    v.data.assign(n * n * n, cplx{0.0, 0.0});
    v.domain = dom;
    return v;
  }

  std::size_t size() const { return data.size(); }

  double norm2() const {
    double s = 0.0;
    for (const auto& z : data) s += std::norm(z);
    return std::sqrt(s);
  }
};

/// Volume files: a JSON sidecar `<prefix>.json` plus raw little-endian
/// samples in `<prefix>.bin`, row-major; dtype "f64" or "c128".
inline void save_volume(const SampledVolume& v, const std::string& prefix) {
  nlohmann::json meta{
      {"dims", {v.n, v.n, v.n}},
      {"dtype", v.real_valued ? "f64" : "c128"},
      {"domain", v.domain == SampledVolume::Domain::spatial ? "spatial" : "frequency"}};
  std::ofstream js(prefix + ".json");
  if (!js) throw std::runtime_error("save_volume: cannot write " + prefix + ".json");
  js << meta.dump(2) << "\n";
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("save_volume: cannot write " + prefix + ".bin");
  for (const auto& z : v.data) {
    const double re = z.real(), im = z.imag();
    bin.write(reinterpret_cast<const char*>(&re), sizeof(double));
    if (!v.real_valued) bin.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
}

inline SampledVolume load_volume(const std::string& prefix) {
  std::ifstream js(prefix + ".json");
  if (!js) throw std::runtime_error("load_volume: cannot read " + prefix + ".json");
  nlohmann::json meta = nlohmann::json::parse(js);
  SampledVolume v;
  v.n = meta.at("dims").at(0).get<std::size_t>();
  v.real_valued = meta.at("dtype").get<std::string>() == "f64";
  v.domain = meta.at("domain").get<std::string>() == "spatial"
                 ? SampledVolume::Domain::spatial
                 : SampledVolume::Domain::frequency;
  v.data.resize(v.n * v.n * v.n);
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("load_volume: cannot read " + prefix + ".bin");
  for (auto& z : v.data) {
    double re = 0.0, im = 0.0;
    bin.read(reinterpret_cast<char*>(&re), sizeof(double));
    if (!v.real_valued) bin.read(reinterpret_cast<char*>(&im), sizeof(double));
    z = {re, im};
  }
  if (!bin) throw std::runtime_error("load_volume: truncated " + prefix + ".bin");
  return v;
}

// ---------------------------------------------------------------------------
// Index set and window evaluation
// ---------------------------------------------------------------------------

struct WindowKey {
  int eps = 0;
  int j = 0;
  std::array<int, 2> ell{0, 0};

  friend bool operator==(const WindowKey& a, const WindowKey& b) {
    return a.eps == b.eps && a.j == b.j && a.ell == b.ell;
  }
  friend bool operator<(const WindowKey& a, const WindowKey& b) {
    if (a.eps != b.eps) return a.eps < b.eps;
    if (a.j != b.j) return a.j < b.j;
    return a.ell < b.ell;
  }
};

enum class AtomKind { coarse, interior, boundary, corner };

inline AtomKind atom_kind(const WindowKey& k) {
  if (k.eps == 0) return AtomKind::coarse;
  const int b = 1 << k.j;
  const int a1 = std::abs(k.ell[0]), a2 = std::abs(k.ell[1]);
  if (a1 == b && a2 == b) return AtomKind::corner;
  if (a1 == b) return AtomKind::boundary;
  return AtomKind::interior;
}

/// Enumeration of (eps, j, l) for j <= J: the coarse triple, then per scale
/// the three pyramids' shear sets (corner shears live on eps = 1).
inline std::vector<WindowKey> index_set(int J) {
  if (J < 0) throw std::invalid_argument("index_set: J must be >= 0");
  std::vector<WindowKey> keys;
  keys.push_back(WindowKey{0, 0, {0, 0}});
  for (int j = 0; j <= J; ++j)
    for (int eps = 1; eps <= 3; ++eps)
      for (const auto& l : SamplingData::sh_shear_set(eps, j))
        keys.push_back(WindowKey{eps, j, {l[0], l[1]}});
  return keys;
}

namespace detail {

inline int next_pyramid(int eps) { return eps % 3 + 1; }
inline int prev_pyramid(int eps) { return eps == 1 ? 3 : eps - 1; }

/// Z^{-eps} xi for d = 3 without allocation.
inline void rot3(const double xi[3], int eps, double out[3]) {
  switch (((eps % 3) + 3) % 3) {
    case 0: out[0] = xi[0]; out[1] = xi[1]; out[2] = xi[2]; break;
    case 1: out[0] = xi[1]; out[1] = xi[2]; out[2] = xi[0]; break;  // Z^{-1}
    default: out[0] = xi[2]; out[1] = xi[0]; out[2] = xi[1]; break; // Z^{-2}
  }
}

inline int pyramid3(const double xi[3]) {
  const double a0 = std::fabs(xi[0]), a1 = std::fabs(xi[1]), a2 = std::fabs(xi[2]);
  const double m = std::max({a0, a1, a2});
  if (m == 0.0) return 0;
  if (a0 == m) return 1;
  if (a1 == m) return 2;
  return 3;
}

/// The v-argument shifts of an atom's piece living in pyramid p, in the
/// orientation (w1, w2) = (z_1/z_3, z_2/z_3) of the p frame: the piece factor
/// is v(2^j w1 - c1) * v(2^j w2 - c2).
struct PieceShift {
  int p = 0;
  int c1 = 0;
  int c2 = 0;
};

inline std::vector<PieceShift> atom_pieces(const WindowKey& key) {
  const AtomKind kind = atom_kind(key);
  const int e1 = key.ell[0] > 0 ? 1 : -1;
  const int e2 = key.ell[1] > 0 ? 1 : -1;
  std::vector<PieceShift> out;
  out.push_back({key.eps, key.ell[0], key.ell[1]});  // own pyramid
  if (kind == AtomKind::boundary || kind == AtomKind::corner)
    out.push_back({next_pyramid(key.eps), e1 * key.ell[1], key.ell[0]});
  if (kind == AtomKind::corner)
    out.push_back({prev_pyramid(key.eps), key.ell[1], e2 * key.ell[0]});
  return out;
}

}  // namespace detail

/// Non-oscillatory magnitude factor of psi^eps_{j,l} at continuum xi.
/// Coarse atoms return Phi_hat; directional atoms return W(2^{-2j} xi) times
/// the pyramid-piecewise v-products; amplitude prefactors and modulations are
/// owned by the transform / inner products.
inline double window_eval(const WindowKey& key, const double xi[3],
                          const ProfileParams& prof = {}) {
  if (key.eps == 0) return Phi_hat(xi, prof);
  const int b = 1 << key.j;
  if (std::abs(key.ell[0]) > b || std::abs(key.ell[1]) > b)
    throw std::invalid_argument("window_eval: shear outside the SH range");

  const double scaled[3] = {std::ldexp(xi[0], -2 * key.j), std::ldexp(xi[1], -2 * key.j),
                            std::ldexp(xi[2], -2 * key.j)};
  const double w = W_window(scaled, prof);
  if (w == 0.0) return 0.0;

  const int p = detail::pyramid3(xi);
  if (p == 0) return 0.0;
  for (const auto& piece : detail::atom_pieces(key)) {
    if (piece.p != p) continue;
    double z[3];
    detail::rot3(xi, p, z);
    const double twoj = static_cast<double>(b);
    return w * bump_v(twoj * z[0] / z[2] - piece.c1, prof) *
           bump_v(twoj * z[1] / z[2] - piece.c2, prof);
  }
  return 0.0;
}

inline double window_eval(const WindowKey& key, const VecD& xi,
                          const ProfileParams& prof = {}) {
  if (xi.size() != 3) throw std::invalid_argument("window_eval: need a 3-vector");
  const double a[3] = {xi[0], xi[1], xi[2]};
  return window_eval(key, a, prof);
}

// ---------------------------------------------------------------------------
// Window atlas: sparse grid samples of every window
// ---------------------------------------------------------------------------

namespace detail {

/// Maps an active angular cell (a,b) of pyramid p at scale j to the owning
/// window key: |a| = 2^j columns are p's own boundary atoms, |b| = 2^j rows
/// come from the previous pyramid's boundary atoms, full corners belong to
/// pyramid 1.
inline WindowKey cell_owner(int p, int j, int a, int b) {
  const int t = 1 << j;
  const bool ea = std::abs(a) == t, eb = std::abs(b) == t;
  if (!eb) return WindowKey{p, j, {a, b}};
  if (!ea) {
    const int l1 = b;
    const int l2 = a * (b > 0 ? 1 : -1);
    return WindowKey{prev_pyramid(p), j, {l1, l2}};
  }
  if (p == 1) return WindowKey{1, j, {a, b}};
  if (p == 2) {  // cells are (e1 l2, l1)
    const int l1 = b;
    const int l2 = a * (b > 0 ? 1 : -1);
    return WindowKey{1, j, {l1, l2}};
  }
  // p == 3: cells are (l2, e2 l1)
  const int l2 = a;
  const int l1 = b * (a > 0 ? 1 : -1);
  return WindowKey{1, j, {l1, l2}};
}

}  // namespace detail

class ShFrame {
 public:
  explicit ShFrame(const FrameSpec& spec) : spec_(spec) {
    spec_.validate();
    build_atlas();
  }

  const FrameSpec& spec() const { return spec_; }
  const std::vector<WindowKey>& keys() const { return keys_; }

  /// Sparse window samples: FFT-linear index -> window value.
  struct WindowData {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
  };
  const WindowData& window(std::size_t w) const { return windows_[w]; }
  std::size_t window_count() const { return windows_.size(); }

  std::size_t key_index(const WindowKey& k) const {
    const auto it = key_pos_.find(k);
    if (it == key_pos_.end()) throw std::invalid_argument("ShFrame: unknown window key");
    return it->second;
  }

  /// Continuum frequency of the integer triple m (centered convention).
  VecD xi_of(int m0, int m1, int m2) const {
    const double fs = spec_.freq_scale();
    return VecD{m0 * fs, m1 * fs, m2 * fs};
  }

 private:
  void build_atlas();

  FrameSpec spec_;
  std::vector<WindowKey> keys_;
  std::vector<WindowData> windows_;
  std::map<WindowKey, std::size_t> key_pos_;
};

inline void ShFrame::build_atlas() {
  keys_ = index_set(spec_.J);
  windows_.assign(keys_.size(), {});
  key_pos_.clear();
  for (std::size_t i = 0; i < keys_.size(); ++i) key_pos_[keys_[i]] = i;

  const int n = static_cast<int>(spec_.n);
  const double fs = spec_.freq_scale();
  const ProfileParams& prof = spec_.profile;

  std::vector<std::vector<WindowData>> partial(spec_.n);
  parallel_for(0, spec_.n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t plane = lo; plane < hi; ++plane) {
      auto& local = partial[plane];
      local.assign(keys_.size(), {});
      const int m0 = static_cast<int>(plane) - n / 2;
      const int i0 = (m0 + n) % n;
      for (int m1 = -n / 2; m1 < n / 2; ++m1) {
        const int i1 = (m1 + n) % n;
        for (int m2 = -n / 2; m2 < n / 2; ++m2) {
          const int i2 = (m2 + n) % n;
          const std::uint32_t lin = static_cast<std::uint32_t>((i0 * n + i1) * n + i2);
          const double xi[3] = {m0 * fs, m1 * fs, m2 * fs};

          const double cw = Phi_hat(xi, prof);
          if (cw > 0.0) {
            local[0].idx.push_back(lin);
            local[0].val.push_back(cw);
          }

          const int p = detail::pyramid3(xi);
          if (p == 0) continue;
          double z[3];
          detail::rot3(xi, p, z);
          for (int j = 0; j <= spec_.J; ++j) {
            const double scaled[3] = {std::ldexp(xi[0], -2 * j),
                                      std::ldexp(xi[1], -2 * j),
                                      std::ldexp(xi[2], -2 * j)};
            const double w = W_window(scaled, prof);
            if (w == 0.0) continue;
            const int t = 1 << j;
            const double u1 = t * z[0] / z[2];
            const double u2 = t * z[1] / z[2];
            const int a0 = static_cast<int>(std::floor(u1));
            const int b0 = static_cast<int>(std::floor(u2));
            for (int a = a0; a <= a0 + 1; ++a) {
              if (a < -t || a > t) continue;
              const double va = bump_v(u1 - a, prof);
              if (va == 0.0) continue;
              for (int b = b0; b <= b0 + 1; ++b) {
                if (b < -t || b > t) continue;
                const double vb = bump_v(u2 - b, prof);
                if (vb == 0.0) continue;
                const WindowKey owner = detail::cell_owner(p, j, a, b);
                auto& slot = local[key_pos_.at(owner)];
                slot.idx.push_back(lin);
                slot.val.push_back(w * va * vb);
              }
            }
          }
        }
      }
    }
  });

  for (std::size_t w = 0; w < keys_.size(); ++w) {
    std::size_t count = 0;
    for (const auto& local : partial) count += local[w].idx.size();
    windows_[w].idx.reserve(count);
    windows_[w].val.reserve(count);
    for (const auto& local : partial) {
      windows_[w].idx.insert(windows_[w].idx.end(), local[w].idx.begin(),
                             local[w].idx.end());
      windows_[w].val.insert(windows_[w].val.end(), local[w].val.begin(),
                             local[w].val.end());
    }
  }
  // Sort each window by linear index (the planes arrive in centered-m order).
  parallel_for(0, windows_.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t w = lo; w < hi; ++w) {
      auto& win = windows_[w];
      std::vector<std::size_t> perm(win.idx.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      std::sort(perm.begin(), perm.end(),
                [&](std::size_t a, std::size_t b) { return win.idx[a] < win.idx[b]; });
      WindowData sorted;
      sorted.idx.reserve(perm.size());
      sorted.val.reserve(perm.size());
      for (std::size_t i : perm) {
        sorted.idx.push_back(win.idx[i]);
        sorted.val.push_back(win.val[i]);
      }
      win = std::move(sorted);
    }
  });
}

// ---------------------------------------------------------------------------
// Tightness check
// ---------------------------------------------------------------------------

struct TightReport {
  double max_dev = 0.0;
  std::array<int, 3> argmax_m{0, 0, 0};
  std::size_t grid_points = 0;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"max_dev", max_dev},
                          {"argmax_m", argmax_m},
                          {"grid_points", grid_points},
                          {"seconds", seconds}};
  }
};

/// T(xi) = Phi_hat^2 + sum window_eval^2 against the telescoped target
/// Phi_hat^2(2^{-2(J+1)} xi) = Phi_hat^2(m / 4n), over the whole grid.
inline TightReport check_tight(const FrameSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(spec.n);
  const double fs = spec.freq_scale();
  const ProfileParams& prof = spec.profile;

  std::vector<double> worst(spec.n, 0.0);
  std::vector<std::array<int, 3>> worst_m(spec.n, {0, 0, 0});

  parallel_for(0, spec.n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t plane = lo; plane < hi; ++plane) {
      const int m0 = static_cast<int>(plane) - n / 2;
      double local_worst = 0.0;
      std::array<int, 3> local_m{0, 0, 0};
      for (int m1 = -n / 2; m1 < n / 2; ++m1)
        for (int m2 = -n / 2; m2 < n / 2; ++m2) {
          const double xi[3] = {m0 * fs, m1 * fs, m2 * fs};
          const double cw = Phi_hat(xi, prof);
          double t = cw * cw;
          const int p = detail::pyramid3(xi);
          if (p != 0) {
            double z[3];
            detail::rot3(xi, p, z);
            for (int j = 0; j <= spec.J; ++j) {
              const double scaled[3] = {std::ldexp(xi[0], -2 * j),
                                        std::ldexp(xi[1], -2 * j),
                                        std::ldexp(xi[2], -2 * j)};
              const double w = W_window(scaled, prof);
              if (w == 0.0) continue;
              const int tt = 1 << j;
              const double u1 = tt * z[0] / z[2];
              const double u2 = tt * z[1] / z[2];
              double angsum = 0.0;
              const int a0 = static_cast<int>(std::floor(u1));
              const int b0 = static_cast<int>(std::floor(u2));
              for (int a = a0; a <= a0 + 1; ++a) {
                if (a < -tt || a > tt) continue;
                const double va = bump_v(u1 - a, prof);
                if (va == 0.0) continue;
                for (int b = b0; b <= b0 + 1; ++b) {
                  if (b < -tt || b > tt) continue;
                  const double vb = bump_v(u2 - b, prof);
                  angsum += va * va * vb * vb;
                }
              }
              t += w * w * angsum;
            }
          }
          const double target_arg[3] = {m0 / (4.0 * n), m1 / (4.0 * n), m2 / (4.0 * n)};
          const double target = Phi_hat(target_arg, prof);
          const double dev = std::fabs(t - target * target);
          if (dev > local_worst) {
            local_worst = dev;
            local_m = {m0, m1, m2};
          }
        }
      worst[plane] = local_worst;
      worst_m[plane] = local_m;
    }
  });

  TightReport rep;
  rep.grid_points = spec.n * spec.n * spec.n;
  for (std::size_t i = 0; i < spec.n; ++i)
    if (worst[i] > rep.max_dev) {
      rep.max_dev = worst[i];
      rep.argmax_m = worst_m[i];
    }
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Analysis / synthesis
// ---------------------------------------------------------------------------

struct CoefficientSet {
  struct Entry {
    ShearletIndex idx;
    cplx value;
  };
  std::vector<Entry> entries;
  FrameSpec frame;
  bool truncated = false;
  double total_energy = 0.0;  // sum |c|^2 over ALL coefficients (pre-truncation)
};

struct KeepPolicy {
  bool all = true;
  std::size_t top_n = 0;
  static KeepPolicy All() { return KeepPolicy{true, 0}; }
  static KeepPolicy TopN(std::size_t n) { return KeepPolicy{false, n}; }
};

namespace detail {

inline ShearletIndex make_index(const WindowKey& key, int k0, int k1, int k2) {
  ShearletIndex idx;
  idx.eps = key.eps;
  idx.j = key.j;
  idx.ell = {key.ell[0], key.ell[1]};
  idx.k = {k0, k1, k2};
  return idx;
}

/// Candidate coefficient as a POD: window position in the canonical key list
/// plus the linear translate. The tie order is the lexicographic
/// (eps, j, l, k) order of the full index.
struct RankedCoeff {
  double mag = 0.0;
  std::uint32_t win = 0;
  std::uint32_t t = 0;
  cplx value;
};

/// "a is better than b": larger magnitude, ties to smaller index.
inline bool coeff_better(const RankedCoeff& a, const RankedCoeff& b,
                         const std::vector<WindowKey>& keys, std::size_t n) {
  if (a.mag != b.mag) return a.mag > b.mag;
  const WindowKey& ka = keys[a.win];
  const WindowKey& kb = keys[b.win];
  if (!(ka == kb)) return ka < kb;
  auto unpack = [n](std::uint32_t t) {
    return std::array<std::uint32_t, 3>{static_cast<std::uint32_t>(t / (n * n)),
                                        static_cast<std::uint32_t>((t / n) % n),
                                        static_cast<std::uint32_t>(t % n)};
  };
  return unpack(a.t) < unpack(b.t);
}

}  // namespace detail

/// Frame analysis: per window multiply the spectrum by the window and inverse
/// transform; translations live on the full grid. top-N keeps the N largest
/// magnitudes overall with ties broken by index order.
inline CoefficientSet analysis(const SampledVolume& f, const ShFrame& frame,
                               const KeepPolicy& keep) {
  const FrameSpec& spec = frame.spec();
  if (f.n != spec.n) throw std::invalid_argument("analysis: volume dims mismatch");
  if (f.domain != SampledVolume::Domain::spatial)
    throw std::invalid_argument("analysis: volume must be spatial");
  const std::size_t n = spec.n, n3 = n * n * n;

  std::vector<cplx> F(f.data);
  fft_3d(F, n, false);

  CoefficientSet out;
  out.frame = spec;
  out.truncated = !keep.all;

  std::mutex merge_mutex;
  std::vector<std::vector<detail::RankedCoeff>> chunk_heaps;
  std::vector<std::vector<CoefficientSet::Entry>> chunk_all;
  std::vector<double> win_energy(frame.window_count(), 0.0);
  const auto& keys = frame.keys();

  parallel_for(0, frame.window_count(), [&](std::size_t lo, std::size_t hi) {
    std::vector<cplx> buf(n3);
    std::vector<detail::RankedCoeff> heap;
    std::vector<CoefficientSet::Entry> all;
    const auto better = [&](const detail::RankedCoeff& a, const detail::RankedCoeff& b) {
      return detail::coeff_better(a, b, keys, n);
    };
    for (std::size_t w = lo; w < hi; ++w) {
      const auto& win = frame.window(w);
      std::fill(buf.begin(), buf.end(), cplx{0.0, 0.0});
      for (std::size_t e = 0; e < win.idx.size(); ++e)
        buf[win.idx[e]] = F[win.idx[e]] * win.val[e];
      fft_3d(buf, n, true);

      double energy = 0.0;
      if (keep.all) {
        for (std::size_t t = 0; t < n3; ++t) {
          energy += std::norm(buf[t]);
          const int k0 = static_cast<int>(t / (n * n));
          const int k1 = static_cast<int>((t / n) % n);
          const int k2 = static_cast<int>(t % n);
          all.push_back({detail::make_index(keys[w], k0, k1, k2), buf[t]});
        }
      } else {
        for (std::size_t t = 0; t < n3; ++t) {
          const double mag = std::abs(buf[t]);
          energy += std::norm(buf[t]);
          detail::RankedCoeff cand{mag, static_cast<std::uint32_t>(w),
                                   static_cast<std::uint32_t>(t), buf[t]};
          if (heap.size() < keep.top_n) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), better);
          } else if (!heap.empty() && better(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), better);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), better);
          }
        }
      }
      win_energy[w] = energy;
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    if (keep.all)
      chunk_all.push_back(std::move(all));
    else
      chunk_heaps.push_back(std::move(heap));
  });

  // Window-ordered reduction keeps the reported energy run-deterministic.
  for (double e : win_energy) out.total_energy += e;

  if (keep.all) {
    for (auto& chunk : chunk_all)
      out.entries.insert(out.entries.end(), chunk.begin(), chunk.end());
    std::sort(out.entries.begin(), out.entries.end(),
              [](const CoefficientSet::Entry& a, const CoefficientSet::Entry& b) {
                return a.idx < b.idx;
              });
    return out;
  }

  std::vector<detail::RankedCoeff> merged;
  for (auto& h : chunk_heaps) merged.insert(merged.end(), h.begin(), h.end());
  std::sort(merged.begin(), merged.end(),
            [&](const detail::RankedCoeff& a, const detail::RankedCoeff& b) {
              return detail::coeff_better(a, b, keys, n);
            });
  if (merged.size() > keep.top_n) merged.resize(keep.top_n);
  out.entries.reserve(merged.size());
  for (const auto& rc : merged) {
    const int k0 = static_cast<int>(rc.t / (n * n));
    const int k1 = static_cast<int>((rc.t / n) % n);
    const int k2 = static_cast<int>(rc.t % n);
    out.entries.push_back({detail::make_index(keys[rc.win], k0, k1, k2), rc.value});
  }
  return out;
}

/// Adjoint of analysis: scatter coefficients per window, transform, apply the
/// window and accumulate in frequency; one inverse transform at the end.
inline SampledVolume synthesis(const CoefficientSet& c, const ShFrame& frame) {
  const FrameSpec& spec = frame.spec();
  const std::size_t n = spec.n, n3 = n * n * n;

  std::map<WindowKey, std::vector<const CoefficientSet::Entry*>> by_window;
  for (const auto& e : c.entries) {
    if (e.idx.dim() != 3) throw std::invalid_argument("synthesis: bad index dim");
    by_window[WindowKey{e.idx.eps, e.idx.j, {e.idx.ell[0], e.idx.ell[1]}}].push_back(&e);
  }

  std::vector<cplx> S(n3, cplx{0.0, 0.0});
  std::vector<std::pair<WindowKey, std::vector<const CoefficientSet::Entry*>>> jobs(
      by_window.begin(), by_window.end());
  // Chunk-ordered accumulation keeps the result run-deterministic.
  std::mutex acc_mutex;
  std::map<std::size_t, std::vector<cplx>> chunk_acc;
  parallel_for(0, jobs.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<cplx> buf(n3);
    std::vector<cplx> acc(n3, cplx{0.0, 0.0});
    for (std::size_t jb = lo; jb < hi; ++jb) {
      const auto& [key, entries] = jobs[jb];
      const auto& win = frame.window(frame.key_index(key));
      std::fill(buf.begin(), buf.end(), cplx{0.0, 0.0});
      for (const auto* e : entries) {
        const std::size_t t =
            (static_cast<std::size_t>(e->idx.k[0]) * n + e->idx.k[1]) * n + e->idx.k[2];
        buf[t] += e->value;
      }
      fft_3d(buf, n, false);
      for (std::size_t e = 0; e < win.idx.size(); ++e)
        acc[win.idx[e]] += buf[win.idx[e]] * win.val[e];
    }
    std::lock_guard<std::mutex> lock(acc_mutex);
    chunk_acc.emplace(lo, std::move(acc));
  });
  for (const auto& [lo, acc] : chunk_acc)
    for (std::size_t i = 0; i < n3; ++i) S[i] += acc[i];

  fft_3d(S, n, true);
  SampledVolume out;
  out.n = n;
  out.data = std::move(S);
  out.domain = SampledVolume::Domain::spatial;
  out.real_valued = false;
  return out;
}

/// Coefficient CSV: "epsilon,j,l1,l2,k1,k2,k3,re,im".
inline void save_coefficients_csv(const CoefficientSet& c, std::ostream& os) {
  os << "epsilon,j,l1,l2,k1,k2,k3,re,im\n";
  char line[256];
  for (const auto& e : c.entries) {
    std::snprintf(line, sizeof(line), "%d,%d,%d,%d,%d,%d,%d,%.17g,%.17g\n", e.idx.eps,
                  e.idx.j, e.idx.ell[0], e.idx.ell[1], e.idx.k[0], e.idx.k[1],
                  e.idx.k[2], e.value.real(), e.value.imag());
    os << line;
  }
}

// ---------------------------------------------------------------------------
// Continuum atoms: phase map and pairwise inner products
// ---------------------------------------------------------------------------

/// The SH parametrization Phi_SH = Phi~_SH o F_label: interior atoms use
/// T = I, boundary/corner atoms at j >= 1 use T = I/4, and the relabeled
/// Delta class (coarse plus all j = 0 boundary/corner atoms) uses
/// T = diag(1,1,1/11) after relabeling.
inline PhasePoint phase_SH(const ShearletIndex& idx, double alpha = 0.5) {
  if (!in_lambda_sh(idx)) throw std::invalid_argument("phase_SH: index outside Lambda_SH");
  static const SamplingData interior = [] {
    SamplingData D;
    D.tau = {1.0, 1.0, 1.0};
    return D;
  }();
  static const SamplingData boundary = [] {
    SamplingData D;
    D.tau = {0.25, 0.25, 0.25};
    return D;
  }();
  static const SamplingData relabeled = [] {
    SamplingData D;
    D.tau = {1.0, 1.0, 1.0 / 11.0};
    D.tau_min = 1.0 / 16.0;
    return D;
  }();

  const ShearletIndex mapped = relabel_SH(idx);
  if (mapped.eps == 0) return shearlet_phase(mapped, relabeled, alpha);
  const WindowKey key{idx.eps, idx.j, {idx.ell[0], idx.ell[1]}};
  return shearlet_phase(idx, atom_kind(key) == AtomKind::interior ? interior : boundary,
                        alpha);
}

namespace detail {

/// Modulation matrix D and amplitude of the continuum atom:
/// psi^(xi) = amp * mag(xi) * exp(-2 pi i <D xi, k>).
struct AtomForm {
  double amp = 1.0;
  MatD D = MatD::identity(3);
};

inline AtomForm atom_form(const WindowKey& key) {
  AtomForm f;
  if (key.eps == 0 || key.j == 0) return f;  // coarse and all scale-0 atoms
  const double half = std::ldexp(1.0, -key.j);      // 2^{-j}
  const double quart = std::ldexp(1.0, -2 * key.j); // 4^{-j}
  MatD core(3, 3);  // S^{-T}_l A^{-j} in pyramid-3 coordinates
  core(0, 0) = half;
  core(1, 1) = half;
  core(2, 2) = quart;
  core(0, 2) = -key.ell[0] * quart;
  core(1, 2) = -key.ell[1] * quart;
  f.D = cyclic_perm_pow(3, key.eps) * core * cyclic_perm_pow(3, -key.eps);
  if (atom_kind(key) == AtomKind::interior) {
    f.amp = quart;  // 2^{-2j}
  } else {
    f.amp = quart / 8.0;  // 2^{-2j-3}
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) f.D(r, c) *= 0.25;
  }
  return f;
}

/// One chart integral: the piece of atom `a` living in pyramid p, integrated
/// in adapted coordinates (w1, w2, rho) with z = (w1 rho, w2 rho, rho) in the
/// p frame; dxi = rho^2 dw1 dw2 drho. The other atom is evaluated through the
/// generic dispatch, so the integrand vanishes off the pair support.
struct ChartSpec {
  int p = 0;
  double w1lo = 0, w1hi = 0, w2lo = 0, w2hi = 0;
  double rlo = 0, rhi = 0;  // positive branch; the negative branch mirrors
};

inline cplx chart_integral(const ChartSpec& ch, const WindowKey& ka,
                           const WindowKey& kb, const VecD& y,
                           const ProfileParams& prof, double qual) {
  // Sampling counts: ~qual samples per sharpest window transition plus ~5 per
  // modulation cycle along each axis.
  const int j = std::max(ka.eps == 0 ? 0 : ka.j, kb.eps == 0 ? 0 : kb.j);
  const int jm = std::min(ka.eps == 0 ? 0 : ka.j, kb.eps == 0 ? 0 : kb.j);
  VecD yp(3, 0.0);
  {
    double tmp[3] = {y[0], y[1], y[2]};
    double out[3];
    rot3(tmp, ch.p, out);
    yp = {out[0], out[1], out[2]};
  }
  const double went = std::max(ch.w1hi - ch.w1lo, ch.w2hi - ch.w2lo);
  const double rent = ch.rhi - ch.rlo;
  const double v_width = 0.875 * std::ldexp(1.0, -j);        // v transition in w
  const double r_width = std::ldexp(1.0, 2 * jm) / 32.0;     // W transition in rho
  const double fw = std::fabs(yp[0]) * ch.rhi;               // cycles per w unit
  const double fr = std::fabs(yp[0]) + std::fabs(yp[1]) + std::fabs(yp[2]);

  auto count = [](double extent, double feat, double freq, double qual_) {
    const double pts = extent * (qual_ / feat + 5.0 * freq);
    return std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(pts)) + 1);
  };
  const std::size_t n1 = count(ch.w1hi - ch.w1lo, v_width, fw, qual);
  const std::size_t n2 = count(ch.w2hi - ch.w2lo, v_width, std::fabs(yp[1]) * ch.rhi, qual);
  const std::size_t nr = count(rent, r_width, fr, qual);
  (void)went;

  const double h1 = (ch.w1hi - ch.w1lo) / static_cast<double>(n1);
  const double h2 = (ch.w2hi - ch.w2lo) / static_cast<double>(n2);
  const double hr = rent / static_cast<double>(nr);

  cplx total{0.0, 0.0};
  for (int sgn : {1, -1}) {
    std::vector<cplx> slab(n1, cplx{0.0, 0.0});
    parallel_for(0, n1, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i1 = lo; i1 < hi; ++i1) {
        const double w1 = ch.w1lo + (i1 + 0.5) * h1;
        cplx acc1{0.0, 0.0};
        for (std::size_t i2 = 0; i2 < n2; ++i2) {
          const double w2 = ch.w2lo + (i2 + 0.5) * h2;
          cplx accr{0.0, 0.0};
          for (std::size_t ir = 0; ir < nr; ++ir) {
            const double rho = sgn * (ch.rlo + (ir + 0.5) * hr);
            const double z[3] = {w1 * rho, w2 * rho, rho};
            // xi = Z^p z
            double xi[3];
            rot3(z, -ch.p, xi);
            const double ma = window_eval(ka, xi, prof);
            if (ma == 0.0) continue;
            const double mb = window_eval(kb, xi, prof);
            if (mb == 0.0) continue;
            const double phase = -2.0 * pi * rho * (yp[0] * w1 + yp[1] * w2 + yp[2]);
            accr += (ma * mb * rho * rho) * cplx{std::cos(phase), std::sin(phase)};
          }
          acc1 += accr;
        }
        slab[i1] = acc1;
      }
    });
    for (const auto& z : slab) total += z;
  }
  return total * (h1 * h2 * hr);
}

}  // namespace detail

/// Continuum inner product <psi_a, psi_b> by frequency-domain quadrature over
/// the support of atom a (piecewise in pyramid-adapted charts), restricted
/// radially to atom b's corona. Resolution refines at least 2x beyond the
/// spec grid and tracks window transitions and modulation frequencies.
inline cplx inner_product(const ShearletIndex& a, const ShearletIndex& b,
                          const FrameSpec& spec, double qual = 16.0) {
  spec.validate();
  if (!in_lambda_sh(a) || !in_lambda_sh(b))
    throw std::invalid_argument("inner_product: index outside Lambda_SH");
  const WindowKey ka{a.eps, a.j, {a.ell[0], a.ell[1]}};
  const WindowKey kb{b.eps, b.j, {b.ell[0], b.ell[1]}};

  // Radial supports: coarse box |xi|inf <= 1/8, corona j in [4^j/16, 4^j/2].
  auto radial = [](const WindowKey& k) {
    if (k.eps == 0) return std::array<double, 2>{0.0, 0.125};
    const double r = std::ldexp(1.0, 2 * k.j);
    return std::array<double, 2>{r / 16.0, r / 2.0};
  };
  const auto ra = radial(ka), rb = radial(kb);
  const double rlo = std::max(ra[0], rb[0]);
  const double rhi = std::min(ra[1], rb[1]);
  if (rlo >= rhi) return {0.0, 0.0};  // disjoint coronae

  const detail::AtomForm fa = detail::atom_form(ka);
  const detail::AtomForm fb = detail::atom_form(kb);
  const VecD kav{double(a.k[0]), double(a.k[1]), double(a.k[2])};
  const VecD kbv{double(b.k[0]), double(b.k[1]), double(b.k[2])};
  const VecD y = fa.D.transposed() * kav - fb.D.transposed() * kbv;

  cplx acc{0.0, 0.0};
  if (ka.eps == 0) {
    // Coarse chart: plain box [-1/8,1/8]^3 (b is coarse or scale-0 here).
    const double ext = 0.125;
    const double feat = 1.0 / 16.0;
    auto count = [&](double yc) {
      return std::max<std::size_t>(
          16, static_cast<std::size_t>(std::ceil(2 * ext * (qual / feat + 5.0 * std::fabs(yc)))));
    };
    const std::size_t n0 = count(y[0]), n1c = count(y[1]), n2c = count(y[2]);
    const double h0 = 2 * ext / n0, h1 = 2 * ext / n1c, h2 = 2 * ext / n2c;
    std::vector<cplx> slab(n0, cplx{0.0, 0.0});
    parallel_for(0, n0, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i0 = lo; i0 < hi; ++i0) {
        const double x0 = -ext + (i0 + 0.5) * h0;
        cplx local{0.0, 0.0};
        for (std::size_t i1 = 0; i1 < n1c; ++i1) {
          const double x1 = -ext + (i1 + 0.5) * h1;
          for (std::size_t i2 = 0; i2 < n2c; ++i2) {
            const double x2 = -ext + (i2 + 0.5) * h2;
            const double xi[3] = {x0, x1, x2};
            const double ma = window_eval(ka, xi, spec.profile);
            if (ma == 0.0) continue;
            const double mb = window_eval(kb, xi, spec.profile);
            if (mb == 0.0) continue;
            const double phase = -2.0 * pi * (x0 * y[0] + x1 * y[1] + x2 * y[2]);
            local += ma * mb * cplx{std::cos(phase), std::sin(phase)};
          }
        }
        slab[i0] = local;
      }
    });
    for (const auto& z : slab) acc += z;
    acc *= h0 * h1 * h2;
  } else {
    const int t = 1 << ka.j;
    for (const auto& piece : detail::atom_pieces(ka)) {
      detail::ChartSpec ch;
      ch.p = piece.p;
      ch.rlo = rlo;
      ch.rhi = rhi;
      ch.w1lo = std::max(-1.0, (piece.c1 - 1.0) / t);
      ch.w1hi = std::min(1.0, (piece.c1 + 1.0) / t);
      ch.w2lo = std::max(-1.0, (piece.c2 - 1.0) / t);
      ch.w2hi = std::min(1.0, (piece.c2 + 1.0) / t);
      if (ch.w1lo >= ch.w1hi || ch.w2lo >= ch.w2hi) continue;
      acc += detail::chart_integral(ch, ka, kb, y, spec.profile, qual);
    }
  }
  return acc * (fa.amp * fb.amp);
}

}  // namespace amol
