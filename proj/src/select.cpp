#include "dtams/select.hpp"

#include <algorithm>
#include <exception>

#include "dtams/error.hpp"
#include "dtams/mapping.hpp"

namespace dtams {

namespace {

void check_window(const Trajectory& clean, Window w) {
  if (w.lo < 1 || w.hi > clean.schedule.num_steps || w.lo > w.hi)
    throw Error(ErrorKind::invalid_argument, "window outside [1, T]");
}

TimestepScore score_one(const Trajectory& clean, int t, int g, const std::vector<double>& p_B,
                        bool amplify) {
  const PlaneGrid& x = clean.at(t);
  double cost = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    const auto part = build_partition(x, g, c);
    const auto wc = weight_costs(build_cost_matrix(x, part, c), p_B);
    cost += solve_optimal_mapping(wc).total;
  }
  const double amp = clean.schedule.gain_to_zero(t - 1);
  return {t, cost, amp, amplify ? cost * amp * amp : cost};
}

}  // namespace

TimestepCostTable score_timesteps(const Trajectory& clean, int g, const std::vector<double>& p_B,
                                  Window window, bool amplify) {
  check_window(clean, window);
  const int n = window.hi - window.lo + 1;
  TimestepCostTable table;
  table.rows.resize(n);
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    try {
      table.rows[k] = score_one(clean, window.lo + k, g, p_B, amplify);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return table;
}

TimestepCostTable score_timesteps_serial(const Trajectory& clean, int g,
                                         const std::vector<double>& p_B, Window window,
                                         bool amplify) {
  check_window(clean, window);
  TimestepCostTable table;
  for (int t = window.lo; t <= window.hi; ++t)
    table.rows.push_back(score_one(clean, t, g, p_B, amplify));
  return table;
}

std::vector<int> select_subset(const TimestepCostTable& table, int n) {
  if (n < 0 || n > static_cast<int>(table.rows.size()))
    throw Error(ErrorKind::invalid_argument, "n exceeds the candidate window");
  std::vector<TimestepScore> rows = table.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score < b.score : a.t < b.t;
  });
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(rows[i].t);
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace dtams
