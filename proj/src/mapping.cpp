#include "dtams/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtams/error.hpp"
#include "dtams/hungarian.hpp"

namespace dtams {

double IntervalPartition::min_width() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < T(); ++i) m = std::min(m, width(i));
  return m;
}

int IntervalPartition::locate(double v) const {
  if (v < tau.front()) return -1;
  if (v >= tau.back()) return T();
  return static_cast<int>(std::upper_bound(tau.begin(), tau.end(), v) - tau.begin()) - 1;
}

IntervalPartition build_partition(std::span<const double> values, int g) {
  if (g < 1 || g > 8) throw Error(ErrorKind::invalid_argument, "g must lie in [1, 8]");
  const std::size_t T = std::size_t{1} << g;
  const std::size_t n = values.size();
  if (n < T) throw Error(ErrorKind::invalid_argument, "state has fewer elements than intervals");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  IntervalPartition part;
  part.g = g;
  part.tau.resize(T + 1);
  part.tau[0] = s[0];
  for (std::size_t i = 1; i < T; ++i) part.tau[i] = s[(i * n + T - 1) / T];
  part.tau[T] = std::nextafter(s[n - 1], std::numeric_limits<double>::infinity());
  for (std::size_t i = 1; i <= T; ++i)
    if (!(part.tau[i] > part.tau[i - 1]))
      throw Error(ErrorKind::degenerate_state, "state has too few distinct values for 2^g intervals");
  part.occupancy.assign(T, 0);
  for (double v : values) ++part.occupancy[part.locate(v)];
  return part;
}

IntervalPartition build_partition(const PlaneGrid& state, int g, int channel) {
  const auto v = state.channel(channel);
  return build_partition(std::span<const double>(v), g);
}

CostMatrix build_cost_matrix(std::span<const double> values, const IntervalPartition& part) {
  const int T = part.T();
  std::vector<double> sum(T, 0.0);
  std::vector<std::size_t> cnt(T, 0);
  std::vector<int> idx(values.size());
  for (std::size_t e = 0; e < values.size(); ++e) {
    const int i = part.locate(values[e]);
    if (i < 0 || i >= T) throw Error(ErrorKind::out_of_range, "value outside the partition");
    idx[e] = i;
    sum[i] += values[e];
    ++cnt[i];
  }
  std::vector<double> mean(T), var(T, 0.0);
  for (int i = 0; i < T; ++i) {
    if (cnt[i] == 0) throw Error(ErrorKind::empty_interval, "empty interval in cost model");
    mean[i] = sum[i] / cnt[i];
  }
  for (std::size_t e = 0; e < values.size(); ++e) {
    const double d = values[e] - mean[idx[e]];
    var[idx[e]] += d * d;
  }
  CostMatrix m(T);
  for (int i = 0; i < T; ++i) {
    var[i] /= cnt[i];
    for (int j = 0; j < T; ++j) {
      const double d = mean[i] - part.midpoint(j);
      m(i, j) = var[i] + d * d;
    }
  }
  return m;
}

CostMatrix build_cost_matrix(const PlaneGrid& state, const IntervalPartition& part, int channel) {
  const auto v = state.channel(channel);
  return build_cost_matrix(std::span<const double>(v), part);
}

CostMatrix weight_costs(const CostMatrix& cost, const std::vector<double>& p_B) {
  if (p_B.size() != static_cast<std::size_t>(cost.T))
    throw Error(ErrorKind::shape_mismatch, "p_B length must equal T");
  CostMatrix out = cost;
  for (int i = 0; i < cost.T; ++i)
    for (int j = 0; j < cost.T; ++j) out(i, j) = p_B[i] * cost(i, j);
  return out;
}

double assignment_total(const CostMatrix& m, const std::vector<int>& perm) {
  double s = 0.0;
  for (int i = 0; i < m.T; ++i) s += m(i, perm[i]);
  return s;
}

MappingMatrix mapping_from_perm(std::vector<int> perm) {
  const int T = static_cast<int>(perm.size());
  MappingMatrix P;
  P.inv.assign(T, -1);
  for (int i = 0; i < T; ++i) {
    if (perm[i] < 0 || perm[i] >= T || P.inv[perm[i]] != -1)
      throw Error(ErrorKind::invalid_argument, "mapping is not a permutation");
    P.inv[perm[i]] = i;
  }
  P.perm = std::move(perm);
  return P;
}

MappingMatrix solve_optimal_mapping(const CostMatrix& wcost) {
  for (double x : wcost.c)
    if (!std::isfinite(x)) throw Error(ErrorKind::non_finite, "non-finite cost entry");
  MappingMatrix P = mapping_from_perm(hungarian_assign(wcost.c, wcost.T));
  P.total = assignment_total(wcost, P.perm);
  return P;
}

namespace {

inline double place_one(double v, std::uint32_t b, const IntervalPartition& part,
                        const MappingMatrix& P, Placement mode) {
  const int T = part.T();
  if (b >= static_cast<std::uint32_t>(T)) throw Error(ErrorKind::invalid_argument, "symbol >= 2^g");
  const int j = P.perm[b];
  if (mode == Placement::midpoint) return part.midpoint(j);
  const int i = part.locate(v);
  if (i < 0 || i >= T) throw Error(ErrorKind::out_of_range, "value outside the partition");
  if (i == j) return v;
  const double r = (v - part.tau[i]) / part.width(i);
  const double out = part.tau[j] + r * part.width(j);
  return std::clamp(out, part.tau[j], std::nextafter(part.tau[j + 1], -INFINITY));
}

void check_embed(std::span<const double> values, std::span<const std::uint32_t> symbols,
                 const IntervalPartition& part, const MappingMatrix& P) {
  if (values.size() != symbols.size())
    throw Error(ErrorKind::shape_mismatch, "symbol slice length must equal element count");
  if (P.perm.size() != static_cast<std::size_t>(part.T()))
    throw Error(ErrorKind::shape_mismatch, "mapping size must equal T");
}

}  // namespace

std::vector<double> embed_plane(std::span<const double> values, const IntervalPartition& part,
                                const MappingMatrix& P, std::span<const std::uint32_t> symbols,
                                Placement mode) {
  check_embed(values, symbols, part, P);
  std::vector<double> out(values.size());
  const long n = static_cast<long>(values.size());
  bool bad = false;
#pragma omp parallel for schedule(static) reduction(|| : bad)
  for (long e = 0; e < n; ++e) {
    try {
      out[e] = place_one(values[e], symbols[e], part, P, mode);
    } catch (const Error&) {
      bad = true;
    }
  }
  if (bad) return embed_plane_serial(values, part, P, symbols, mode);  // rethrows serially
  return out;
}

std::vector<double> embed_plane_serial(std::span<const double> values,
                                       const IntervalPartition& part, const MappingMatrix& P,
                                       std::span<const std::uint32_t> symbols, Placement mode) {
  check_embed(values, symbols, part, P);
  std::vector<double> out(values.size());
  for (std::size_t e = 0; e < values.size(); ++e)
    out[e] = place_one(values[e], symbols[e], part, P, mode);
  return out;
}

PlaneGrid embed_plane(const PlaneGrid& state, const IntervalPartition& part,
                      const MappingMatrix& P, const SymbolStream& symbols, Placement mode,
                      int channel) {
  const auto v = state.channel(channel);
  PlaneGrid out = state;
  out.set_channel(channel, embed_plane(std::span<const double>(v), part, P,
                                       std::span<const std::uint32_t>(symbols.symbols), mode));
  return out;
}

SymbolStream extract_plane(std::span<const double> values, const IntervalPartition& part,
                           const MappingMatrix& P) {
  SymbolStream s;
  s.g = part.g;
  s.symbols.resize(values.size());
  const int T = part.T();
  const long n = static_cast<long>(values.size());
  bool bad = false;
#pragma omp parallel for schedule(static) reduction(|| : bad)
  for (long e = 0; e < n; ++e) {
    const int j = part.locate(values[e]);
    if (j < 0 || j >= T) {
      bad = true;
      continue;
    }
    s.symbols[e] = static_cast<std::uint32_t>(P.inv[j]);
  }
  if (bad) throw Error(ErrorKind::out_of_range, "value outside [tau_0, tau_T)");
  return s;
}

SymbolStream extract_plane_serial(std::span<const double> values, const IntervalPartition& part,
                                  const MappingMatrix& P) {
  SymbolStream s;
  s.g = part.g;
  s.symbols.resize(values.size());
  for (std::size_t e = 0; e < values.size(); ++e) {
    const int j = part.locate(values[e]);
    if (j < 0 || j >= part.T()) throw Error(ErrorKind::out_of_range, "value outside [tau_0, tau_T)");
    s.symbols[e] = static_cast<std::uint32_t>(P.inv[j]);
  }
  return s;
}

SymbolStream extract_plane(const PlaneGrid& stego, const IntervalPartition& part,
                           const MappingMatrix& P, int channel) {
  const auto v = stego.channel(channel);
  return extract_plane(std::span<const double>(v), part, P);
}

}  // namespace dtams
