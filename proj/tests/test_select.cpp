#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "dtams/error.hpp"
#include "dtams/rng.hpp"
#include "dtams/select.hpp"

using namespace dtams;

namespace {

TimestepCostTable table_of(const std::vector<std::pair<int, double>>& rows) {
  TimestepCostTable t;
  for (auto [ts, s] : rows) t.rows.push_back({ts, s, 1.0, s});
  std::sort(t.rows.begin(), t.rows.end(), [](auto& a, auto& b) { return a.t < b.t; });
  return t;
}

// minimum-sum subsets by enumeration; among ties the ascending t list that is lexicographically first
std::vector<int> enumerate_best(const TimestepCostTable& t, int n) {
  const int m = static_cast<int>(t.rows.size());
  double best = 1e300;
  std::vector<int> arg;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (__builtin_popcount(mask) != n) continue;
    double s = 0;
    std::vector<int> ts;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) {
        s += t.rows[i].score;
        ts.push_back(t.rows[i].t);
      }
    if (s < best || (s == best && ts < arg)) {
      best = s;
      arg = ts;
    }
  }
  std::sort(arg.rbegin(), arg.rend());
  return arg;
}

}  // namespace

TEST_CASE("select examples") {
  const auto t = table_of({{40, 5}, {30, 1}, {20, 3}, {10, 2}});
  CHECK(select_subset(t, 2) == std::vector<int>{30, 10});
  CHECK(select_subset(t, 4) == std::vector<int>{40, 30, 20, 10});
  CHECK(select_subset(table_of({{13, 1}, {12, 1}, {11, 1}, {10, 1}}), 2) == std::vector<int>{11, 10});
  CHECK_THROWS_AS(select_subset(t, 5), Error);
}

TEST_CASE("select equals exhaustive enumeration") {
  const KeyedRng r(1, "select");
  std::uint64_t k = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(r.bits64(k++) % 12);
    std::vector<std::pair<int, double>> rows;
    for (int i = 0; i < m; ++i) rows.push_back({10 + i, static_cast<double>(r.bits64(k++) % 5)});
    const auto t = table_of(rows);
    std::vector<int> prev;
    for (int n = 0; n <= m; ++n) {
      const auto got = select_subset(t, n);
      REQUIRE(got == enumerate_best(t, n));
      for (int x : prev) CHECK(std::find(got.begin(), got.end(), x) != got.end());
      prev = got;
    }
  }
}

TEST_CASE("scoring on trajectories") {
  const auto tg = generate_target(2, 32, 32, 1);
  const auto flat = Schedule::linear(30, 1.0, 1.0, 0.0);
  const auto tr = run_reverse(2, flat, tg);
  const std::vector<double> pB(8, 0.125);
  const auto a = score_timesteps(tr, 3, pB, {5, 12}, true);
  REQUIRE(a.rows.size() == 8);
  for (const auto& row : a.rows) {
    CHECK(row.score == a.rows[0].score);
    CHECK(row.amplification == 1.0);
    CHECK(row.score == row.cost);
    CHECK(row.score >= 0.0);
  }
  const auto sched = Schedule::standard();
  const auto tr2 = run_reverse(2, sched, tg);
  const auto b1 = score_timesteps(tr2, 2, {0.1, 0.2, 0.3, 0.4});
  const auto b2 = score_timesteps(tr2, 2, {0.1, 0.2, 0.3, 0.4});
  const auto b3 = score_timesteps_serial(tr2, 2, {0.1, 0.2, 0.3, 0.4});
  REQUIRE(b1.rows.size() == 51);
  for (std::size_t i = 0; i < b1.rows.size(); ++i) {
    CHECK(b1.rows[i].t == 10 + static_cast<int>(i));
    CHECK(b1.rows[i].score == b2.rows[i].score);
    CHECK(b1.rows[i].score == b3.rows[i].score);
    CHECK(b1.rows[i].amplification == doctest::Approx(sched.gain_to_zero(b1.rows[i].t - 1)));
  }
  const auto amp = score_timesteps(tr2, 2, {0.1, 0.2, 0.3, 0.4}, {}, true);
  for (std::size_t i = 0; i < amp.rows.size(); ++i)
    CHECK(amp.rows[i].score == doctest::Approx(b1.rows[i].cost * amp.rows[i].amplification * amp.rows[i].amplification));
  CHECK_THROWS_AS(score_timesteps(tr2, 2, {0.25, 0.25, 0.25, 0.25}, {0, 5}), Error);
  CHECK_THROWS_AS(score_timesteps(tr2, 2, {0.25, 0.25, 0.25, 0.25}, {90, 101}), Error);
}

TEST_CASE("degenerate states propagate") {
  PlaneGrid tg(8, 8, 1, 0, 1, 0.5);
  const auto sched = Schedule::linear(20, 0.0, 0.0, 0.0);
  const auto tr = run_reverse(1, sched, tg);
  CHECK_THROWS_AS(score_timesteps(tr, 1, {0.5, 0.5}, {1, 5}), Error);
}
