#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dtams/error.hpp"
#include "dtams/hungarian.hpp"
#include "dtams/mapping.hpp"
#include "dtams/rng.hpp"

using namespace dtams;

namespace {

std::vector<double> uniform_values(std::uint64_t seed, std::size_t n) {
  const KeyedRng r(seed, "values");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = r.uniform(i);
  return v;
}

std::vector<std::uint32_t> random_symbols(std::uint64_t seed, std::size_t n, int T) {
  const KeyedRng r(seed, "symbols");
  std::vector<std::uint32_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<std::uint32_t>(r.bits64(i) % T);
  return s;
}

// lexicographically first minimizer over all permutations
std::pair<double, std::vector<int>> brute_force(const CostMatrix& m) {
  std::vector<int> p(m.T);
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> arg;
  do {
    const double s = assignment_total(m, p);
    if (s < best) {
      best = s;
      arg = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return {best, arg};
}

}  // namespace

TEST_CASE("partition of 0..7") {
  std::vector<double> v{3, 1, 7, 0, 5, 2, 6, 4};
  const auto p = build_partition(v, 1);
  REQUIRE(p.T() == 2);
  CHECK(p.tau[0] == 0.0);
  CHECK(p.tau[1] == 4.0);
  CHECK(p.tau[2] == std::nextafter(7.0, 8.0));
  CHECK(p.occupancy == std::vector<std::size_t>{4, 4});
}

TEST_CASE("partition of a uniform sample") {
  const auto v = uniform_values(1, 40000);
  const auto p = build_partition(v, 2);
  const double tol = 3.0 / std::sqrt(40000.0);
  for (int i = 0; i <= 4; ++i) CHECK(std::abs(p.tau[i] - 0.25 * i) < tol);
  const auto [mn, mx] = std::minmax_element(p.occupancy.begin(), p.occupancy.end());
  CHECK(*mx - *mn <= 1);
  CHECK_THROWS_AS(build_partition(std::vector<double>(64, 0.5), 2), Error);
}

TEST_CASE("equal occupancy with distinct values") {
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = uniform_values(100 + trial, 97 + trial * 13);
    for (int g = 1; g <= 3; ++g) {
      const auto p = build_partition(v, g);
      const auto [mn, mx] = std::minmax_element(p.occupancy.begin(), p.occupancy.end());
      CHECK(*mx - *mn <= 1);
      CHECK(p.tau.front() <= *std::min_element(v.begin(), v.end()));
      CHECK(p.tau.back() > *std::max_element(v.begin(), v.end()));
    }
  }
}

TEST_CASE("cost matrix examples") {
  IntervalPartition part;
  part.g = 1;
  part.tau = {0.0, 1.0, 2.0};
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back((i + 0.5) / 10000);
  v.push_back(1.5);
  const auto c = build_cost_matrix(v, part);
  CHECK(c(0, 0) == doctest::Approx(1.0 / 12).epsilon(1e-6));
  CHECK(c(0, 1) == doctest::Approx(1.0 / 12 + 1).epsilon(1e-6));

  IntervalPartition p3;
  p3.g = 1;
  p3.tau = {0.1, 0.35, 1.0};
  const auto c3 = build_cost_matrix(std::vector<double>{0.1, 0.2, 0.3, 0.5}, p3);
  CHECK(c3(0, 0) == doctest::Approx((0.01 + 0 + 0.01) / 3 + (0.2 - 0.225) * (0.2 - 0.225)));

  IntervalPartition gap;
  gap.g = 1;
  gap.tau = {0.0, 0.5, 1.0};
  CHECK_THROWS_AS(build_cost_matrix(std::vector<double>{0.1, 0.2}, gap), Error);
  CHECK_THROWS_AS(build_cost_matrix(std::vector<double>{0.1, 0.7, 1.5}, gap), Error);
}

TEST_CASE("diagonal dominance of the cost model") {
  const auto v = uniform_values(7, 4096);
  const auto p = build_partition(v, 3);
  const auto c = build_cost_matrix(v, p);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(c(i, j) >= 0.0);
      CHECK(c(i, i) <= c(i, j));
    }
}

TEST_CASE("weighting") {
  CostMatrix c(2);
  c.c = {0.4, 1.2, 1.2, 0.4};
  const auto w = weight_costs(c, {0.75, 0.25});
  CHECK(w(0, 0) == doctest::Approx(0.3));
  CHECK(w(0, 1) == doctest::Approx(0.9));
  CHECK(w(1, 0) == doctest::Approx(0.3));
  CHECK(w(1, 1) == doctest::Approx(0.1));
  const auto z = weight_costs(c, {0.0, 1.0});
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);
  CHECK_THROWS_AS(weight_costs(c, {1.0}), Error);
}

TEST_CASE("optimal mapping examples") {
  CostMatrix m(2);
  m.c = {0.1, 0.4, 0.3, 0.2};
  const auto P = solve_optimal_mapping(m);
  CHECK(P.perm == std::vector<int>{0, 1});
  CHECK(P.total == doctest::Approx(0.3));
  CostMatrix z(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) z(i, j) = i == j ? 0.0 : 1.0;
  CHECK(solve_optimal_mapping(z).total == 0.0);
  z(1, 2) = NAN;
  CHECK_THROWS_AS(solve_optimal_mapping(z), Error);
}

TEST_CASE("hungarian equals brute force and breaks ties lexicographically") {
  const KeyedRng r(3, "hungarian");
  std::uint64_t k = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const int T = 1 << (1 + trial % 3);
    CostMatrix m(T);
    const bool integer = trial % 2 == 1;
    for (auto& x : m.c) x = integer ? static_cast<double>(r.bits64(k++) % 4) : r.uniform(k++) * 10;
    const auto [best, arg] = brute_force(m);
    const auto P = solve_optimal_mapping(m);
    REQUIRE(P.total == best);
    if (integer) CHECK(P.perm == arg);
    CHECK(P.total <= assignment_total(m, std::vector<int>{[&] {
            std::vector<int> id(T);
            std::iota(id.begin(), id.end(), 0);
            return id;
          }()}));
  }
}

TEST_CASE("offset embedding arithmetic") {
  IntervalPartition part;
  part.g = 1;
  part.tau = {0.0, 0.5, 1.0};
  const auto P = mapping_from_perm({0, 1});
  const std::vector<double> v{0.25};
  CHECK(embed_plane(v, part, P, std::vector<std::uint32_t>{1})[0] == 0.75);
  CHECK(embed_plane(v, part, P, std::vector<std::uint32_t>{0})[0] == 0.25);
  CHECK(embed_plane(v, part, P, std::vector<std::uint32_t>{1}, Placement::midpoint)[0] == 0.75);
  CHECK_THROWS_AS(mapping_from_perm({0, 0}), Error);
}

TEST_CASE("boundary value decodes to the right interval") {
  IntervalPartition part;
  part.g = 1;
  part.tau = {0.0, 0.5, 1.0};
  const auto P = mapping_from_perm({1, 0});
  CHECK(extract_plane(std::vector<double>{0.5}, part, P).symbols[0] == 0);
  CHECK(extract_plane(std::vector<double>{0.4999}, part, P).symbols[0] == 1);
  CHECK_THROWS_AS(extract_plane(std::vector<double>{1.0}, part, P), Error);
}

TEST_CASE("roundtrip, occupancy law and CDF preservation") {
  for (int trial = 0; trial < 200; ++trial) {
    const int g = 1 + trial % 3, T = 1 << g;
    const auto v = uniform_values(500 + trial, 1000 + trial);
    const auto part = build_partition(v, g);
    const auto s = random_symbols(900 + trial, v.size(), T);
    SymbolStream ss;
    ss.g = g;
    ss.symbols = s;
    const auto P = solve_optimal_mapping(weight_costs(build_cost_matrix(v, part), frequency_table(ss)));
    const auto out = embed_plane(v, part, P, s);
    CHECK(extract_plane(out, part, P).symbols == s);
    const auto counts = ss.counts();
    std::vector<std::uint64_t> occ(T, 0);
    for (double x : out) ++occ[part.locate(x)];
    for (int j = 0; j < T; ++j) CHECK(occ[j] == counts[P.inv[j]]);
  }
  const auto v = uniform_values(77, 4096);
  const auto part = build_partition(v, 2);
  std::vector<std::uint32_t> s(v.size());
  for (std::size_t e = 0; e < v.size(); ++e) s[e] = static_cast<std::uint32_t>(part.locate(v[e]));
  const auto out = embed_plane(v, part, mapping_from_perm({0, 1, 2, 3}), s);
  CHECK(out == v);
}

TEST_CASE("midpoint placement tolerates noise below half the minimum width") {
  const auto v = uniform_values(12, 2000);
  const auto part = build_partition(v, 3);
  const auto s = random_symbols(13, v.size(), 8);
  const auto P = mapping_from_perm({3, 1, 7, 0, 2, 6, 5, 4});
  auto out = embed_plane(v, part, P, s, Placement::midpoint);
  const double h = 0.499 * part.min_width();
  const KeyedRng r(4, "noise");
  for (std::size_t e = 0; e < out.size(); ++e) out[e] += (2 * r.uniform(e) - 1) * h;
  CHECK(extract_plane(out, part, P).symbols == s);
}
