#pragma once
#include <vector>

#include "dtams/backbone.hpp"

namespace dtams {

struct TimestepScore {
  int t;
  double cost;           // optimal weighted mapping total, summed over channels
  double amplification;  // prod_{k<t} a_k
  double score;
};

struct TimestepCostTable {
  std::vector<TimestepScore> rows;  // ascending t
};

struct Window {
  int lo = 10;
  int hi = 60;
};

TimestepCostTable score_timesteps(const Trajectory& clean, int g, const std::vector<double>& p_B,
                                  Window window = {}, bool amplify = false);
TimestepCostTable score_timesteps_serial(const Trajectory& clean, int g,
                                         const std::vector<double>& p_B, Window window = {},
                                         bool amplify = false);

// n smallest scores, ties toward smaller t; result sorted descending
std::vector<int> select_subset(const TimestepCostTable& table, int n);

}  // namespace dtams
