#pragma once
#include <ostream>
#include <vector>

#include "dtams/grid.hpp"

namespace dtams {

struct RefineConfig {
  double lambda = 0.1;
  double eps = 0.0;
  double eta = 1.0 / (2.0 + 8.0 * 0.1);
  int max_iters = 50;
  double w = 0.75;

  // eps = 0.25 * min interval width, eta = 1 / (2 + 8 lambda)
  static RefineConfig defaults(double min_interval_width, double lambda = 0.1);
  void validate() const;
};

// S as an element mask; an empty mask means every element
using Region = std::vector<char>;

struct TraceRow {
  int iter;
  double l_rcn, l_sot, total;
};

struct PgdResult {
  PlaneGrid y;
  std::vector<TraceRow> trace;
};

double smoothness_loss(const PlaneGrid& y, const Region& S, double lambda);
double reconstruction_loss(const PlaneGrid& y, const PlaneGrid& t, const Region& S);
// gradient of L_rcn + L_sot (mean form)
std::vector<double> total_gradient(const PlaneGrid& y, const PlaneGrid& t, const Region& S,
                                   double lambda);
std::vector<double> total_gradient_serial(const PlaneGrid& y, const PlaneGrid& t,
                                          const Region& S, double lambda);

// Certified curvature bound of |S| * (L_rcn + L_sot): 2 + 2 lambda ||D||_1 ||D||_inf,
// where D maps y to the neighbour-mean residuals on S.
double lipschitz_bound(const PlaneGrid& shape, const Region& S, double lambda);

// Steps of size eta on |S| * (L_rcn + L_sot), each followed by projection
// onto [t - eps, t + eps]. Starts at y = t and stops at the first step that
// fails to lower the loss, keeping the previous iterate.
PgdResult pgd_optimize(const PlaneGrid& t, const RefineConfig& cfg, const Region& S = {});

PlaneGrid blend_residual(const PlaneGrid& z_hat, const PlaneGrid& z, double w);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

}  // namespace dtams
