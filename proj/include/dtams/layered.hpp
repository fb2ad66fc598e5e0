#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "dtams/mapping.hpp"

namespace dtams {

// One nesting level on one channel. Values are placed in probability space
// under N(0, sd^2), so each target interval receives the mass of the source.
struct NestLevel {
  IntervalPartition part;
  MappingMatrix P;
  double sd = 1.0;
  double kappa = 1.0;
};

double normal_cdf(double x);
double normal_quantile(double p);

// tau snapped to f32, outer edges widened; throws degenerate_state on collapse
IntervalPartition snap_partition(const IntervalPartition& part);

// Places symbol b of element e into interval P.perm[b], keeping the relative
// position of v[e] within its own source interval at 1/T resolution.
std::vector<double> warp_place(std::span<const double> v, const NestLevel& lv,
                               std::span<const std::uint32_t> symbols, double margin);
std::vector<double> warp_place_serial(std::span<const double> v, const NestLevel& lv,
                                      std::span<const std::uint32_t> symbols, double margin);

struct Unplaced {
  std::vector<std::uint32_t> symbols;
  std::vector<double> prev;  // estimate of the plane before placement
  std::size_t erasures = 0;
};

// z is the placed plane (already divided by kappa)
Unplaced warp_unplace(std::span<const double> z, const NestLevel& lv, double margin);
Unplaced warp_unplace_serial(std::span<const double> z, const NestLevel& lv, double margin);

// positive root of var(w k a + (1 - w) n) = var(n)
double variance_matched_kappa(std::span<const double> placed, std::span<const double> noise,
                              double w);

// Decodes levels [0, k] of a placed plane (level k outermost); out[l] holds level l symbols.
std::vector<std::vector<std::uint32_t>> decode_levels(std::span<const double> z,
                                                      std::span<const NestLevel> levels,
                                                      double margin, std::size_t* erasures = nullptr);

// Distance from each element of a placed plane to the nearest edge of the
// cell that decodes to the same symbols at every level.
std::vector<double> decode_margins(std::span<const double> z, std::span<const NestLevel> levels,
                                   double margin);

}  // namespace dtams
