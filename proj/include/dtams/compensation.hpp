#pragma once
#include <ostream>
#include <vector>

#include "dtams/grid.hpp"

namespace dtams {

struct CompensationConfig {
  double alpha_p = 1.0;
  double alpha_l = 0.005;
  double alpha_s = 0.75;
  int iters = 20;
  double step = 0.05;
  double sigma_ref = 1.0;

  void validate() const;
};

struct CompensationRow {
  int iter;
  double d_p, d_l, d_s, total;
};

struct CompensationResult {
  PlaneGrid x;
  std::vector<CompensationRow> trace;
};

// 2x2 orthonormal Haar per channel, each band quantized to 256 levels over its
// attainable range for inputs in [lo, hi], then inverted.
PlaneGrid roundtrip_transform(const PlaneGrid& x);
PlaneGrid roundtrip_transform_serial(const PlaneGrid& x);

double deviation_pixel(const PlaneGrid& x, const PlaneGrid& ref);
double deviation_latent(const PlaneGrid& x, double sigma_ref = 1.0);
double deviation_semantic(const PlaneGrid& x, const PlaneGrid& ref);

double compensation_loss(const PlaneGrid& x, const PlaneGrid& ref, const CompensationConfig& cfg);
std::vector<double> compensation_gradient(const PlaneGrid& x, const PlaneGrid& ref,
                                          const CompensationConfig& cfg);

// Descent on L_cm from x; each step is halved until the loss does not rise.
CompensationResult compensate(const PlaneGrid& x, const PlaneGrid& ref,
                              const CompensationConfig& cfg = {});

void write_trace_csv(std::ostream& os, const std::vector<CompensationRow>& trace);

}  // namespace dtams
