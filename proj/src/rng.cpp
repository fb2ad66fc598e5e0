#include "dtams/rng.hpp"

#include <cmath>
#include <numbers>

namespace dtams {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

KeyedRng::KeyedRng(std::uint64_t master_seed, std::string label)
    : seed_(master_seed), label_(std::move(label)) {
  const std::uint64_t k = splitmix64(master_seed ^ splitmix64(fnv1a(label_)));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::array<std::uint32_t, 4> KeyedRng::block(std::uint64_t counter) const {
  std::array<std::uint32_t, 4> c = {static_cast<std::uint32_t>(counter),
                                    static_cast<std::uint32_t>(counter >> 32), 0u, 0u};
  std::uint32_t k0 = key_[0], k1 = key_[1];
  for (int r = 0; r < 10; ++r) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, c[0], hi0, lo0);
    mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return c;
}

std::uint64_t KeyedRng::bits64(std::uint64_t i) const {
  const auto b = block(i);
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double KeyedRng::uniform(std::uint64_t i) const {
  return static_cast<double>(bits64(i) >> 11) * 0x1.0p-53;
}

double KeyedRng::normal(std::uint64_t i) const {
  const auto b = block(i);
  const std::uint64_t a = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
  const std::uint64_t c = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(c >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PlaneGrid sample_standard_normal(const KeyedRng& rng, int h, int w, int c,
                                 double lo, double hi) {
  PlaneGrid g(h, w, c, lo, hi);
  const long n = static_cast<long>(g.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) g.values[i] = rng.normal(static_cast<std::uint64_t>(i));
  return g;
}

PlaneGrid sample_standard_normal_serial(const KeyedRng& rng, int h, int w,
                                        int c, double lo, double hi) {
  PlaneGrid g(h, w, c, lo, hi);
  for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = rng.normal(i);
  return g;
}

}  // namespace dtams
