#include "dtams/channel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "dtams/error.hpp"

namespace dtams {

void AttackSpec::validate() const {
  bool ok = true;
  switch (kind) {
    case AttackKind::none: break;
    case AttackKind::gaussian:
    case AttackKind::salt_pepper: ok = ratio >= 0.0 && ratio <= 1.0; break;
    case AttackKind::jpeg_like: ok = ratio > 0.0 && ratio <= 100.0; break;
  }
  if (!ok) throw Error(ErrorKind::invalid_argument, "attack ratio out of bounds: " + name());
}

std::string AttackSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::gaussian: os << "gaussian:"; break;
    case AttackKind::salt_pepper: os << "sp:"; break;
    case AttackKind::jpeg_like: os << "jpeg:"; break;
  }
  os << ratio;
  return os.str();
}

AttackSpec AttackSpec::parse(const std::string& s) {
  if (s == "none") return {};
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::invalid_argument, "bad attack: " + s);
  const std::string k = s.substr(0, colon);
  AttackSpec spec;
  if (k == "gaussian") spec.kind = AttackKind::gaussian;
  else if (k == "sp" || k == "salt_pepper") spec.kind = AttackKind::salt_pepper;
  else if (k == "jpeg" || k == "jpeg_like") spec.kind = AttackKind::jpeg_like;
  else throw Error(ErrorKind::invalid_argument, "unknown attack kind: " + k);
  try {
    std::size_t used = 0;
    spec.ratio = std::stod(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument, "bad attack ratio: " + s);
  }
  spec.validate();
  return spec;
}

namespace {

constexpr std::array<int, 64> kLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

std::array<double, 64> dct_basis() {
  std::array<double, 64> b{};
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x)
      b[u * 8 + x] = (u == 0 ? std::sqrt(0.125) : 0.5) *
                     std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  return b;
}

inline double to_level(const PlaneGrid& g, double v) {
  return std::nearbyint((std::clamp(v, g.lo, g.hi) - g.lo) / (g.hi - g.lo) * 255.0);
}
inline double from_level(const PlaneGrid& g, double q) { return g.lo + q * (g.hi - g.lo) / 255.0; }

void jpeg_block(const PlaneGrid& in, PlaneGrid& out, int h0, int w0, int c,
                const std::array<int, 64>& Q, const std::array<double, 64>& B) {
  double px[64], tmp[64], coef[64];
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const int h = std::min(h0 + y, in.height - 1), w = std::min(w0 + x, in.width - 1);
      px[y * 8 + x] = to_level(in, in.at(h, w, c)) - 128.0;
    }
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int x = 0; x < 8; ++x) s += B[u * 8 + x] * px[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int y = 0; y < 8; ++y) s += B[v * 8 + y] * tmp[y * 8 + u];
      coef[v * 8 + u] = std::nearbyint(s / Q[v * 8 + u]) * Q[v * 8 + u];
    }
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int v = 0; v < 8; ++v) s += B[v * 8 + y] * coef[v * 8 + u];
      tmp[y * 8 + u] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      if (h0 + y >= in.height || w0 + x >= in.width) continue;
      double s = 0;
      for (int u = 0; u < 8; ++u) s += B[u * 8 + x] * tmp[y * 8 + u];
      out.at(h0 + y, w0 + x, c) = from_level(in, std::clamp(std::nearbyint(s + 128.0), 0.0, 255.0));
    }
}

inline double attack_pixel(const PlaneGrid& img, const AttackSpec& spec, const KeyedRng& rng,
                           std::size_t i) {
  const double v = img.values[i];
  if (spec.kind == AttackKind::gaussian)
    return from_level(img, to_level(img, v + rng.normal(i) * spec.ratio * (img.hi - img.lo)));
  if (rng.uniform(2 * i) < spec.ratio) return rng.uniform(2 * i + 1) < 0.5 ? img.lo : img.hi;
  return v;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  s ^= s >> 31;
  return s * 0xbf58476d1ce4e5b9ULL;
}

}  // namespace

std::array<int, 64> jpeg_quant_table(double quality) {
  if (!(quality > 0.0 && quality <= 100.0))
    throw Error(ErrorKind::invalid_argument, "jpeg quality must be in (0, 100]");
  const double S = quality < 50.0 ? 5000.0 / quality : 200.0 - 2.0 * quality;
  std::array<int, 64> q{};
  for (int i = 0; i < 64; ++i)
    q[i] = std::clamp(static_cast<int>(std::floor((kLuma[i] * S + 50.0) / 100.0)), 1, 255);
  return q;
}

PlaneGrid apply_attack(const PlaneGrid& img, const AttackSpec& spec, const KeyedRng& rng) {
  spec.validate();
  if (spec.kind == AttackKind::none || spec.kind == AttackKind::jpeg_like)
    return apply_attack_serial(img, spec, rng);
  PlaneGrid out = img;
  const long n = static_cast<long>(img.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out.values[i] = attack_pixel(img, spec, rng, i);
  return out;
}

PlaneGrid apply_attack_serial(const PlaneGrid& img, const AttackSpec& spec, const KeyedRng& rng) {
  spec.validate();
  PlaneGrid out = img;
  switch (spec.kind) {
    case AttackKind::none: break;
    case AttackKind::gaussian:
    case AttackKind::salt_pepper:
      for (std::size_t i = 0; i < img.size(); ++i) out.values[i] = attack_pixel(img, spec, rng, i);
      break;
    case AttackKind::jpeg_like: {
      const auto Q = jpeg_quant_table(spec.ratio);
      const auto B = dct_basis();
      for (int c = 0; c < img.channels; ++c)
        for (int h = 0; h < img.height; h += 8)
          for (int w = 0; w < img.width; w += 8) jpeg_block(img, out, h, w, c, Q, B);
      break;
    }
  }
  return out;
}

double mae(const PlaneGrid& a, const PlaneGrid& b) {
  require_same_shape(a, b, "mae");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s / static_cast<double>(a.size());
}

double mse(const PlaneGrid& a, const PlaneGrid& b) {
  require_same_shape(a, b, "mse");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return s / static_cast<double>(a.size());
}

double psnr(const PlaneGrid& a, const PlaneGrid& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  const double r = a.hi - a.lo;
  return 10.0 * std::log10(r * r / m);
}

double ssim(const PlaneGrid& a, const PlaneGrid& b) {
  require_same_shape(a, b, "ssim");
  if (a.height < 8 || a.width < 8) throw Error(ErrorKind::invalid_argument, "ssim needs 8x8");
  const double L = a.hi - a.lo, C1 = (0.01 * L) * (0.01 * L), C2 = (0.03 * L) * (0.03 * L);
  double acc = 0;
  long count = 0;
  for (int c = 0; c < a.channels; ++c)
    for (int h = 0; h + 8 <= a.height; ++h)
      for (int w = 0; w + 8 <= a.width; ++w) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const double u = a.at(h + y, w + x, c), v = b.at(h + y, w + x, c);
            sa += u; sb += v; saa += u * u; sbb += v * v; sab += u * v;
          }
        const double ma = sa / 64, mb = sb / 64;
        const double va = saa / 64 - ma * ma, vb = sbb / 64 - mb * mb, cov = sab / 64 - ma * mb;
        acc += (2 * ma * mb + C1) * (2 * cov + C2) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        ++count;
      }
  return acc / count;
}

double extraction_accuracy(const SymbolStream& sent, const SymbolStream& received) {
  if (sent.size() != received.size() || sent.g != received.g)
    throw Error(ErrorKind::shape_mismatch, "symbol streams differ in length");
  if (sent.size() == 0) return 100.0;
  std::uint64_t wrong = 0;
  const std::uint32_t mask = (1u << sent.g) - 1u;
  for (std::size_t i = 0; i < sent.size(); ++i)
    wrong += std::popcount((sent.symbols[i] ^ received.symbols[i]) & mask);
  const double total = static_cast<double>(sent.size()) * sent.g;
  return 100.0 * (total - static_cast<double>(wrong)) / total;
}

double steganalysis_proxy(const PlaneGrid& cover, const PlaneGrid& stego, std::uint64_t seed,
                          int splits) {
  require_same_shape(cover, stego, "steganalysis_proxy");
  const std::size_t n = cover.size();
  std::vector<int> qa(n), qb(n);
  for (std::size_t i = 0; i < n; ++i) {
    qa[i] = static_cast<int>(to_level(cover, cover.values[i]));
    qb[i] = static_cast<int>(to_level(stego, stego.values[i]));
  }
  const std::size_t na = n / 2, nb = n - na;
  if (na == 0) return 0.5;
  std::vector<std::size_t> perm(n);
  double acc = 0.0;
  for (int k = 0; k < splits; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    const KeyedRng rng(mix(seed, k), "steganalysis/split");
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.bits64(i) % (i + 1)]);
    std::array<double, 256> ha{}, hb{};
    for (std::size_t i = 0; i < na; ++i) ha[qa[perm[i]]] += 1;
    for (std::size_t i = na; i < n; ++i) hb[qb[perm[i]]] += 1;
    const double ra = std::sqrt(static_cast<double>(nb) / na), rb = std::sqrt(static_cast<double>(na) / nb);
    double x = 0.0;
    int bins = 0;
    for (int j = 0; j < 256; ++j) {
      if (ha[j] + hb[j] == 0) continue;
      ++bins;
      const double d = ha[j] * ra - hb[j] * rb;
      x += d * d / (ha[j] + hb[j]);
    }
    acc += bins < 2 ? 0.5 : boost::math::gamma_p(0.5 * (bins - 1), 0.5 * x);
  }
  return acc / splits;
}

}  // namespace dtams
