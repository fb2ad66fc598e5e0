#include "dtams/hungarian.hpp"

#include <cmath>
#include <limits>

namespace dtams {

namespace {

struct Tight {
  const std::vector<double>& c;
  const std::vector<double>& u;
  const std::vector<double>& v;
  int n;
  double tol;
  bool operator()(int i, int j) const {
    return c[static_cast<std::size_t>(i) * n + j] - u[i] - v[j] <= tol;
  }
};

// alternating path search: give row r a new column, ending at column goal
bool reroute(int r, int goal, const Tight& tight, std::vector<int>& row_of,
             std::vector<int>& col_of, std::vector<char>& seen, const std::vector<char>& locked) {
  for (int j = 0; j < tight.n; ++j) {
    if (seen[j] || locked[j] || !tight(r, j)) continue;
    seen[j] = 1;
    if (j == goal || (row_of[j] >= 0 && reroute(row_of[j], goal, tight, row_of, col_of, seen, locked))) {
      row_of[j] = r;
      col_of[r] = j;
      return true;
    }
  }
  return false;
}

double total_of(const std::vector<double>& c, int n, const std::vector<int>& col_of) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += c[static_cast<std::size_t>(i) * n + col_of[i]];
  return s;
}

}  // namespace

std::vector<int> hungarian_assign(const std::vector<double>& cost, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  // potentials and matching, 1-based with a virtual column 0
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  auto a = [&](int i, int j) { return cost[static_cast<std::size_t>(i - 1) * n + (j - 1)]; };
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> col_of(n), row_of(n);
  for (int j = 1; j <= n; ++j) {
    col_of[p[j] - 1] = j - 1;
    row_of[j - 1] = p[j] - 1;
  }

  // lexicographic tie-break on the equality subgraph of the final duals
  double scale = 1.0;
  for (double x : cost) scale = std::max(scale, std::fabs(x));
  std::vector<double> uu(n), vv(n);
  for (int i = 0; i < n; ++i) uu[i] = u[i + 1];
  for (int j = 0; j < n; ++j) vv[j] = v[j + 1];
  const Tight tight{cost, uu, vv, n, 64 * n * std::numeric_limits<double>::epsilon() * scale};
  std::vector<char> locked(n, 0);
  double best = total_of(cost, n, col_of);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < col_of[i]; ++j) {
      if (locked[j] || !tight(i, j)) continue;
      auto c2 = col_of;
      auto r2 = row_of;
      const int goal = col_of[i];
      const int r = row_of[j];
      std::vector<char> seen(n, 0);
      seen[j] = 1;
      auto lock2 = locked;
      lock2[j] = 1;
      // row r must move off column j; row i takes j and frees goal
      r2[goal] = -1;
      r2[j] = i;
      c2[i] = j;
      if (!reroute(r, goal, tight, r2, c2, seen, lock2)) continue;
      const double t2 = total_of(cost, n, c2);
      if (t2 <= best) {
        best = t2;
        col_of = std::move(c2);
        row_of = std::move(r2);
        break;
      }
    }
    locked[col_of[i]] = 1;
  }
  return col_of;
}

}  // namespace dtams
