#pragma once
#include <array>
#include <cstdint>
#include <string>

#include "dtams/grid.hpp"

namespace dtams {

// Counter-based generator: Philox4x32-10 keyed by (master_seed, label).
// Draw i of a stream depends only on (seed, label, i).
class KeyedRng {
 public:
  KeyedRng(std::uint64_t master_seed, std::string label);

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  std::array<std::uint32_t, 4> block(std::uint64_t counter) const;
  // uniform in [0, 1) with 53 random bits, draw index i
  double uniform(std::uint64_t i) const;
  std::uint64_t bits64(std::uint64_t i) const;
  // standard normal, draw index i (Box-Muller on one Philox block)
  double normal(std::uint64_t i) const;

 private:
  std::uint64_t seed_;
  std::string label_;
  std::array<std::uint32_t, 2> key_;
};

PlaneGrid sample_standard_normal(const KeyedRng& rng, int h, int w, int c,
                                 double lo = kStateLo, double hi = kStateHi);
PlaneGrid sample_standard_normal_serial(const KeyedRng& rng, int h, int w,
                                        int c, double lo = kStateLo,
                                        double hi = kStateHi);

}  // namespace dtams
