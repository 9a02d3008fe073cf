#include "cellmb/assignment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace cellmb;

namespace {

// Every feasible assignment of rows to distinct columns, sorted by cost.
std::vector<double> enumerate_costs(const Eigen::MatrixXd& c) {
    const int n = static_cast<int>(c.rows()), m = static_cast<int>(c.cols());
    std::vector<int> cols(m);
    std::iota(cols.begin(), cols.end(), 0);
    std::vector<double> costs;
    std::vector<std::vector<int>> seen;
    do {
        std::vector<int> head(cols.begin(), cols.begin() + n);
        if (std::find(seen.begin(), seen.end(), head) != seen.end()) continue;
        seen.push_back(head);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += c(i, head[i]);
        if (std::isfinite(s)) costs.push_back(s);
    } while (std::next_permutation(cols.begin(), cols.end()));
    std::sort(costs.begin(), costs.end());
    return costs;
}

} // namespace

TEST(SolveAssignment, SmallKnownCase) {
    Eigen::MatrixXd c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto a = solve_assignment(c);
    ASSERT_TRUE(a);
    EXPECT_DOUBLE_EQ(a->cost, 5.0);
    EXPECT_EQ(a->col_of_row, (std::vector<int>{1, 0, 2}));
}

TEST(SolveAssignment, RectangularAndForbidden) {
    Eigen::MatrixXd c(2, 4);
    c << 5, forbidden_cost, 1, 9, forbidden_cost, 2, 1, 7;
    const auto a = solve_assignment(c);
    ASSERT_TRUE(a);
    EXPECT_DOUBLE_EQ(a->cost, 3.0);
    Eigen::MatrixXd none(2, 2);
    none << forbidden_cost, 1, forbidden_cost, 2;
    EXPECT_FALSE(solve_assignment(none));
}

TEST(SolveAssignment, MatchesEnumeration) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-5.0, 10.0);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + t % 4, m = n + t % 3;
        Eigen::MatrixXd c(n, m);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < m; ++k) c(i, k) = u(rng);
        const auto a = solve_assignment(c);
        ASSERT_TRUE(a);
        EXPECT_NEAR(a->cost, enumerate_costs(c).front(), 1e-9);
    }
}

TEST(KBest, MatchesSortedEnumeration) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::bernoulli_distribution forbid(0.15);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 3, m = n + 1 + t % 2;
        Eigen::MatrixXd c(n, m);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < m; ++k) c(i, k) = forbid(rng) ? forbidden_cost : u(rng);
        const auto all = enumerate_costs(c);
        const auto best = k_best_assignments(c, 8);
        ASSERT_EQ(best.size(), std::min<std::size_t>(8, all.size()));
        for (std::size_t h = 0; h < best.size(); ++h) EXPECT_NEAR(best[h].cost, all[h], 1e-9);
        for (std::size_t h = 0; h < best.size(); ++h)
            for (std::size_t g = h + 1; g < best.size(); ++g) EXPECT_NE(best[h].col_of_row, best[g].col_of_row);
    }
}

TEST(KBest, ZeroRequested) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
    EXPECT_TRUE(k_best_assignments(c, 0).empty());
}
