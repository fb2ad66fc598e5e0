#include "dtams/layered.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "dtams/error.hpp"

namespace dtams {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  p = std::clamp(p, 1e-300, 1.0 - 1e-16);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

IntervalPartition snap_partition(const IntervalPartition& part) {
  IntervalPartition out = part;
  const int T = part.T();
  auto down = [](double x) {
    float f = static_cast<float>(x);
    if (f > x) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
    return static_cast<double>(f);
  };
  auto up = [](double x) {
    float f = static_cast<float>(x);
    if (f < x) f = std::nextafter(f, std::numeric_limits<float>::infinity());
    return static_cast<double>(f);
  };
  out.tau[0] = down(part.tau[0]);
  out.tau[T] = up(part.tau[T]);
  for (int i = 1; i < T; ++i) out.tau[i] = static_cast<float>(part.tau[i]);
  for (int i = 1; i <= T; ++i)
    if (!(out.tau[i] > out.tau[i - 1]))
      throw Error(ErrorKind::degenerate_state, "partition collapses at f32 precision");
  return out;
}

namespace {

struct Warp {
  std::vector<double> pb;
  int T;
  double sd;

  explicit Warp(const NestLevel& lv) : T(lv.part.T()), sd(lv.sd) {
    if (!(sd > 0)) throw Error(ErrorKind::degenerate_state, "zero spread in nesting level");
    for (double t : lv.part.tau) pb.push_back(normal_cdf(t / sd));
  }
  // interval index clipped to [0, T-1]; flags values outside [pb_0, pb_T)
  int locate(double p, bool& outside) const {
    outside = p < pb.front() || p >= pb.back();
    const int i = static_cast<int>(std::upper_bound(pb.begin(), pb.end(), p) - pb.begin()) - 1;
    return std::clamp(i, 0, T - 1);
  }
};

inline double place_in(const Warp& wp, double v, int j, double m) {
  const double p = normal_cdf(v / wp.sd);
  bool outside;
  const int i = wp.locate(p, outside);
  const double u = std::clamp(i + (p - wp.pb[i]) / (wp.pb[i + 1] - wp.pb[i]), 0.0,
                              std::nextafter(static_cast<double>(wp.T), 0.0));
  const double lo = j > 0 ? m : 0.0, hi = j < wp.T - 1 ? m : 0.0;
  const double pp = wp.pb[j] + (wp.pb[j + 1] - wp.pb[j]) * (lo + (1.0 - lo - hi) * u / wp.T);
  return wp.sd * normal_quantile(pp);
}

inline double place_one(const Warp& wp, const NestLevel& lv, double v, std::uint32_t b, double m) {
  return place_in(wp, v, lv.P.perm[b], m);
}

inline void unplace_one(const Warp& wp, const NestLevel& lv, double z, double m,
                        std::uint32_t& sym, double& prev, bool& outside) {
  const double p = normal_cdf(z / wp.sd);
  const int j = wp.locate(p, outside);
  sym = static_cast<std::uint32_t>(lv.P.inv[j]);
  const double lo = j > 0 ? m : 0.0, hi = j < wp.T - 1 ? m : 0.0;
  const double r = ((p - wp.pb[j]) / (wp.pb[j + 1] - wp.pb[j]) - lo) / (1.0 - lo - hi);
  const double f = std::clamp(r, 0.0, 1.0 - 1e-9) * wp.T;
  const int i = std::min(static_cast<int>(std::floor(f)), wp.T - 1);
  prev = wp.sd * normal_quantile(wp.pb[i] + (f - i) * (wp.pb[i + 1] - wp.pb[i]));
}

void check_place(std::span<const double> v, std::span<const std::uint32_t> s, const NestLevel& lv,
                 double m) {
  if (v.size() != s.size()) throw Error(ErrorKind::shape_mismatch, "symbol count != plane size");
  if (!(m >= 0 && m < 0.5)) throw Error(ErrorKind::invalid_argument, "margin must lie in [0, 0.5)");
  for (auto b : s)
    if (b >= static_cast<std::uint32_t>(lv.part.T()))
      throw Error(ErrorKind::invalid_argument, "symbol exceeds 2^g - 1");
}

}  // namespace

std::vector<double> warp_place(std::span<const double> v, const NestLevel& lv,
                               std::span<const std::uint32_t> symbols, double margin) {
  check_place(v, symbols, lv, margin);
  const Warp wp(lv);
  std::vector<double> out(v.size());
  const long n = static_cast<long>(v.size());
#pragma omp parallel for schedule(static)
  for (long e = 0; e < n; ++e) out[e] = place_one(wp, lv, v[e], symbols[e], margin);
  return out;
}

std::vector<double> warp_place_serial(std::span<const double> v, const NestLevel& lv,
                                      std::span<const std::uint32_t> symbols, double margin) {
  check_place(v, symbols, lv, margin);
  const Warp wp(lv);
  std::vector<double> out(v.size());
  for (std::size_t e = 0; e < v.size(); ++e) out[e] = place_one(wp, lv, v[e], symbols[e], margin);
  return out;
}

Unplaced warp_unplace(std::span<const double> z, const NestLevel& lv, double margin) {
  const Warp wp(lv);
  Unplaced u;
  u.symbols.resize(z.size());
  u.prev.resize(z.size());
  const long n = static_cast<long>(z.size());
  std::size_t er = 0;
#pragma omp parallel for schedule(static) reduction(+ : er)
  for (long e = 0; e < n; ++e) {
    bool outside;
    unplace_one(wp, lv, z[e], margin, u.symbols[e], u.prev[e], outside);
    er += outside;
  }
  u.erasures = er;
  return u;
}

Unplaced warp_unplace_serial(std::span<const double> z, const NestLevel& lv, double margin) {
  const Warp wp(lv);
  Unplaced u;
  u.symbols.resize(z.size());
  u.prev.resize(z.size());
  for (std::size_t e = 0; e < z.size(); ++e) {
    bool outside;
    unplace_one(wp, lv, z[e], margin, u.symbols[e], u.prev[e], outside);
    u.erasures += outside;
  }
  return u;
}

double variance_matched_kappa(std::span<const double> placed, std::span<const double> noise,
                              double w) {
  if (placed.size() != noise.size() || placed.empty())
    throw Error(ErrorKind::shape_mismatch, "kappa inputs differ in size");
  const double n = static_cast<double>(placed.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < placed.size(); ++i) { ma += placed[i]; mb += noise[i]; }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cv = 0;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    va += (placed[i] - ma) * (placed[i] - ma);
    vb += (noise[i] - mb) * (noise[i] - mb);
    cv += (placed[i] - ma) * (noise[i] - mb);
  }
  if (w == 0.0 || va == 0.0) return 1.0;
  const double A = w * w * va, B = 2 * w * (1 - w) * cv, C = (1 - w) * (1 - w) * vb - vb;
  const double disc = B * B - 4 * A * C;
  if (!(disc >= 0)) throw Error(ErrorKind::non_finite, "no real variance-matching scale");
  return (-B + std::sqrt(disc)) / (2 * A);
}

std::vector<std::vector<std::uint32_t>> decode_levels(std::span<const double> z,
                                                      std::span<const NestLevel> levels,
                                                      double margin, std::size_t* erasures) {
  std::vector<std::vector<std::uint32_t>> out(levels.size());
  std::vector<double> cur(z.begin(), z.end());
  for (std::size_t k = levels.size(); k-- > 0;) {
    if (k + 1 < levels.size())
      for (auto& v : cur) v /= levels[k].kappa;
    auto u = warp_unplace(cur, levels[k], margin);
    if (erasures) *erasures += u.erasures;
    out[k] = std::move(u.symbols);
    cur = std::move(u.prev);
  }
  return out;
}

std::vector<double> decode_margins(std::span<const double> z, std::span<const NestLevel> levels,
                                   double margin) {
  const std::size_t L = levels.size(), n = z.size();
  std::vector<Warp> warps;
  for (const auto& lv : levels) warps.emplace_back(lv);
  std::vector<std::vector<int>> js(L, std::vector<int>(n));
  std::vector<double> cur(z.begin(), z.end());
  for (std::size_t k = L; k-- > 0;) {
    if (k + 1 < L)
      for (auto& v : cur) v /= levels[k].kappa;
    auto u = warp_unplace(cur, levels[k], margin);
    for (std::size_t e = 0; e < n; ++e) js[k][e] = levels[k].P.perm[u.symbols[e]];
    cur = std::move(u.prev);
  }
  std::vector<double> out(n);
  for (std::size_t e = 0; e < n; ++e) {
    double a = levels[0].part.tau[js[0][e]], b = levels[0].part.tau[js[0][e] + 1];
    for (std::size_t k = 1; k < L; ++k) {
      const double kap = levels[k - 1].kappa;
      a = place_in(warps[k], kap * a, js[k][e], margin);
      b = place_in(warps[k], std::nextafter(kap * b, -INFINITY), js[k][e], margin);
    }
    out[e] = std::max(0.0, std::min(z[e] - a, b - z[e]));
  }
  return out;
}

}  // namespace dtams
