#pragma once
#include <vector>

namespace dtams {

// Exact min-cost perfect assignment on an n x n row-major matrix.
// Among optimal assignments the lexicographically smallest row->column
// vector is returned (ties judged on the tight edges of the final duals).
std::vector<int> hungarian_assign(const std::vector<double>& cost, int n);

}  // namespace dtams
