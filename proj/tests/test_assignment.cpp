#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "crowdtrack/assignment.hpp"

using namespace crowdtrack;

namespace {

/// Exhaustive minimum over all row->column injections.
double brute_force_min(const std::vector<double>& cost, int rows, int cols) {
    const int n = std::max(rows, cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double total = 0.0;
        for (int r = 0; r < rows; ++r) {
            if (perm[r] < cols) {
                total += cost[r * cols + perm[r]];
            }
        }
        // with rows <= cols every row must be assigned; with rows > cols the
        // permutation drops the rows mapped past the column count
        int assigned = 0;
        for (int r = 0; r < rows; ++r) {
            if (perm[r] < cols) ++assigned;
        }
        if (assigned == std::min(rows, cols)) {
            best = std::min(best, total);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("assign: stated examples") {
    const Assignment a = assign({1, 9, 9, 1}, 2, 2);
    REQUIRE(a.pairs.size() == 2);
    CHECK(a.pairs[0] == std::pair<int, int>{0, 0});
    CHECK(a.pairs[1] == std::pair<int, int>{1, 1});
    CHECK(a.total_cost == doctest::Approx(2.0));

    const Assignment single = assign({3.5}, 1, 1);
    REQUIRE(single.pairs.size() == 1);
    CHECK(single.total_cost == doctest::Approx(3.5));
}

TEST_CASE("assign: empty and rectangular shapes") {
    const Assignment e = assign({}, 0, 0);
    CHECK(e.pairs.empty());

    const Assignment wide = assign({5, 1, 7, 2, 8, 3}, 2, 3);
    CHECK(wide.pairs.size() == 2);
    CHECK(wide.unassigned_cols.size() == 1);
    CHECK(wide.unassigned_rows.empty());

    const Assignment tall = assign({5, 1, 7, 2, 8, 3}, 3, 2);
    CHECK(tall.pairs.size() == 2);
    CHECK(tall.unassigned_rows.size() == 1);
    CHECK(tall.unassigned_cols.empty());
}

TEST_CASE("assign rejects non-finite costs") {
    CHECK_THROWS(assign({1.0, std::numeric_limits<double>::infinity()}, 1, 2));
}

TEST_CASE("assign equals brute force on random matrices") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> val(0, 99);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + static_cast<int>(rng() % 6);
        const int cols = 1 + static_cast<int>(rng() % 6);
        std::vector<double> cost(static_cast<size_t>(rows) * cols);
        for (auto& c : cost) {
            c = static_cast<double>(val(rng));
        }
        const Assignment a = assign(cost, rows, cols);
        CHECK(a.pairs.size() == static_cast<size_t>(std::min(rows, cols)));
        CHECK(a.total_cost == doctest::Approx(brute_force_min(cost, rows, cols)));

        // one-to-one
        std::set<int> used_rows, used_cols;
        for (const auto& [r, c] : a.pairs) {
            CHECK(!used_rows.contains(r));
            CHECK(!used_cols.contains(c));
            used_rows.insert(r);
            used_cols.insert(c);
        }
    }
}
