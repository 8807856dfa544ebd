#pragma once

#include <vector>

namespace crowdtrack {

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
    std::vector<int> unassigned_rows;
    std::vector<int> unassigned_cols;
    double total_cost = 0.0;
};

/// Minimum-total-cost one-to-one assignment of a rectangular cost matrix
/// (row-major, rows x cols, finite entries). Every row or column beyond the
/// smaller dimension is reported unassigned.
Assignment assign(const std::vector<double>& cost, int rows, int cols);

}  // namespace crowdtrack
