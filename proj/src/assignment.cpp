#include "crowdtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crowdtrack {

namespace {

// Hungarian algorithm with potentials, O(rows^2 * cols); requires rows <= cols.
// Returns col index per row.
std::vector<int> solve(const std::vector<double>& cost, int rows, int cols) {
    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
    std::vector<int> match(cols + 1, 0);  // 1-based row matched to each col
    for (int i = 1; i <= rows; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(cols + 1, kInf);
        std::vector<int> way(cols + 1, 0);
        std::vector<char> used(cols + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(rows, -1);
    for (int j = 1; j <= cols; ++j) {
        if (match[j] > 0) {
            row_to_col[match[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

}  // namespace

Assignment assign(const std::vector<double>& cost, int rows, int cols) {
    if (static_cast<int>(cost.size()) != rows * cols) {
        throw std::invalid_argument("assign: cost size mismatch");
    }
    for (double c : cost) {
        if (!std::isfinite(c)) {
            throw std::invalid_argument("assign: cost entries must be finite");
        }
    }
    Assignment result;
    if (rows == 0 || cols == 0) {
        for (int r = 0; r < rows; ++r) result.unassigned_rows.push_back(r);
        for (int c = 0; c < cols; ++c) result.unassigned_cols.push_back(c);
        return result;
    }

    std::vector<int> row_to_col;
    if (rows <= cols) {
        row_to_col = solve(cost, rows, cols);
    } else {
        std::vector<double> t(cost.size());
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                t[c * rows + r] = cost[r * cols + c];
            }
        }
        const std::vector<int> col_to_row = solve(t, cols, rows);
        row_to_col.assign(rows, -1);
        for (int c = 0; c < cols; ++c) {
            row_to_col[col_to_row[c]] = c;
        }
    }

    std::vector<char> col_used(cols, 0);
    for (int r = 0; r < rows; ++r) {
        const int c = row_to_col[r];
        if (c < 0) {
            result.unassigned_rows.push_back(r);
        } else {
            result.pairs.emplace_back(r, c);
            result.total_cost += cost[r * cols + c];
            col_used[c] = 1;
        }
    }
    for (int c = 0; c < cols; ++c) {
        if (!col_used[c]) {
            result.unassigned_cols.push_back(c);
        }
    }
    return result;
}

}  // namespace crowdtrack
