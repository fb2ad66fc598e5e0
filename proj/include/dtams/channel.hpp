#pragma once
#include <array>
#include <cstdint>
#include <string>

#include "dtams/codec.hpp"
#include "dtams/grid.hpp"
#include "dtams/rng.hpp"

namespace dtams {

enum class AttackKind { none, gaussian, salt_pepper, jpeg_like };

// gaussian: noise std as a fraction of the value range; salt_pepper: corrupted
// fraction; jpeg_like: quality in (0, 100]
struct AttackSpec {
  AttackKind kind = AttackKind::none;
  double ratio = 0.0;

  void validate() const;
  std::string name() const;
  // "none", "gaussian:0.0004", "sp:0.0001", "jpeg:90"
  static AttackSpec parse(const std::string& s);
};

PlaneGrid apply_attack(const PlaneGrid& img, const AttackSpec& spec, const KeyedRng& rng);
PlaneGrid apply_attack_serial(const PlaneGrid& img, const AttackSpec& spec, const KeyedRng& rng);

// luminance table scaled by quality, clamped to [1, 255]
std::array<int, 64> jpeg_quant_table(double quality);

double mae(const PlaneGrid& a, const PlaneGrid& b);
double mse(const PlaneGrid& a, const PlaneGrid& b);
// +infinity for identical images
double psnr(const PlaneGrid& a, const PlaneGrid& b);
double ssim(const PlaneGrid& a, const PlaneGrid& b);

double extraction_accuracy(const SymbolStream& sent, const SymbolStream& received);

// Mean chi-square CDF over keyed random half splits, each comparing the 8-bit
// histogram of one half of the cover with the complementary half of the stego.
double steganalysis_proxy(const PlaneGrid& cover, const PlaneGrid& stego,
                          std::uint64_t seed = 0x5eed, int splits = 16);

}  // namespace dtams
