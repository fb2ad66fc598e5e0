#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "dtams/codec.hpp"
#include "dtams/grid.hpp"

namespace dtams {

// tau[0] < tau[1] < ... < tau[T]; interval i (0-based) is [tau[i], tau[i+1]).
struct IntervalPartition {
  int g = 0;
  std::vector<double> tau;
  std::vector<std::size_t> occupancy;

  int T() const { return static_cast<int>(tau.size()) - 1; }
  double width(int i) const { return tau[i + 1] - tau[i]; }
  double midpoint(int i) const { return 0.5 * (tau[i] + tau[i + 1]); }
  double min_width() const;
  // interval index, or -1 below tau[0], T at or above tau[T]
  int locate(double v) const;
};

// T x T, row-major
struct CostMatrix {
  int T = 0;
  std::vector<double> c;

  CostMatrix() = default;
  explicit CostMatrix(int n) : T(n), c(static_cast<std::size_t>(n) * n, 0.0) {}
  double& operator()(int i, int j) { return c[static_cast<std::size_t>(i) * T + j]; }
  double operator()(int i, int j) const { return c[static_cast<std::size_t>(i) * T + j]; }
};

// perm[i] = j maps native interval i (symbol i) to target interval j, 0-based.
struct MappingMatrix {
  std::vector<int> perm;
  std::vector<int> inv;
  std::vector<double> p_B;
  double total = 0.0;
};

enum class Placement { offset, midpoint };

IntervalPartition build_partition(std::span<const double> values, int g);
IntervalPartition build_partition(const PlaneGrid& state, int g, int channel = 0);

CostMatrix build_cost_matrix(std::span<const double> values, const IntervalPartition& part);
CostMatrix build_cost_matrix(const PlaneGrid& state, const IntervalPartition& part,
                             int channel = 0);
CostMatrix weight_costs(const CostMatrix& cost, const std::vector<double>& p_B);

MappingMatrix solve_optimal_mapping(const CostMatrix& wcost);
MappingMatrix mapping_from_perm(std::vector<int> perm);
double assignment_total(const CostMatrix& m, const std::vector<int>& perm);

std::vector<double> embed_plane(std::span<const double> values, const IntervalPartition& part,
                                const MappingMatrix& P, std::span<const std::uint32_t> symbols,
                                Placement mode = Placement::offset);
std::vector<double> embed_plane_serial(std::span<const double> values,
                                       const IntervalPartition& part, const MappingMatrix& P,
                                       std::span<const std::uint32_t> symbols,
                                       Placement mode = Placement::offset);
PlaneGrid embed_plane(const PlaneGrid& state, const IntervalPartition& part,
                      const MappingMatrix& P, const SymbolStream& symbols,
                      Placement mode = Placement::offset, int channel = 0);

SymbolStream extract_plane(std::span<const double> values, const IntervalPartition& part,
                           const MappingMatrix& P);
SymbolStream extract_plane_serial(std::span<const double> values,
                                  const IntervalPartition& part, const MappingMatrix& P);
SymbolStream extract_plane(const PlaneGrid& stego, const IntervalPartition& part,
                           const MappingMatrix& P, int channel = 0);

}  // namespace dtams
