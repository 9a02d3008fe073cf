#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

namespace cellmb {

inline constexpr double forbidden_cost = std::numeric_limits<double>::infinity();

/// Row-to-column assignment and its total cost.
struct Assignment {
    std::vector<int> col_of_row;
    double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols)
/// by shortest augmenting paths with dual updates. Infinite entries are
/// forbidden pairs; returns nullopt when no complete assignment exists.
inline std::optional<Assignment> solve_assignment(const Eigen::MatrixXd& cost) {
    const auto n = static_cast<int>(cost.rows());
    const auto m = static_cast<int>(cost.cols());
    Assignment out;
    if (n == 0) return out;
    if (n > m) return std::nullopt;

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n, 0.0), v(m, 0.0), spc(m);
    std::vector<int> path(m, -1), col4row(n, -1), row4col(m, -1), remaining(m);
    std::vector<char> SR(n), SC(m);

    for (int cur = 0; cur < n; ++cur) {
        double min_val = 0.0;
        int num_remaining = m;
        for (int it = 0; it < m; ++it) remaining[it] = m - it - 1;
        std::fill(SR.begin(), SR.end(), 0);
        std::fill(SC.begin(), SC.end(), 0);
        std::fill(spc.begin(), spc.end(), inf);

        int sink = -1;
        int i = cur;
        while (sink == -1) {
            SR[i] = 1;
            int index = -1;
            double lowest = inf;
            for (int it = 0; it < num_remaining; ++it) {
                const int j = remaining[it];
                const double r = min_val + cost(i, j) - u[i] - v[j];
                if (r < spc[j]) {
                    path[j] = i;
                    spc[j] = r;
                }
                if (spc[j] < lowest || (spc[j] == lowest && row4col[j] == -1)) {
                    lowest = spc[j];
                    index = it;
                }
            }
            min_val = lowest;
            if (min_val == inf || index < 0) return std::nullopt;
            const int j = remaining[index];
            if (row4col[j] == -1) {
                sink = j;
            } else {
                i = row4col[j];
            }
            SC[j] = 1;
            remaining[index] = remaining[--num_remaining];
        }

        u[cur] += min_val;
        for (int r = 0; r < n; ++r)
            if (SR[r] && r != cur) u[r] += min_val - spc[col4row[r]];
        for (int c = 0; c < m; ++c)
            if (SC[c]) v[c] -= min_val - spc[c];

        int j = sink;
        while (true) {
            const int r = path[j];
            row4col[j] = r;
            std::swap(col4row[r], j);
            if (r == cur) break;
        }
    }

    out.col_of_row = col4row;
    for (int r = 0; r < n; ++r) out.cost += cost(r, col4row[r]);
    return out;
}

/// The k lowest-cost assignments in nondecreasing cost order (Murty's
/// partitioning). Fewer are returned when fewer feasible assignments exist.
inline std::vector<Assignment> k_best_assignments(const Eigen::MatrixXd& cost, std::size_t k) {
    std::vector<Assignment> out;
    if (k == 0) return out;
    const auto n = static_cast<int>(cost.rows());

    struct Node {
        Assignment solution;
        Eigen::MatrixXd cost;
        bool operator>(const Node& o) const { return solution.cost > o.solution.cost; }
    };
    std::priority_queue<Node, std::vector<Node>, std::greater<>> queue;

    auto first = solve_assignment(cost);
    if (!first) return out;
    queue.push(Node{*first, cost});

    while (!queue.empty() && out.size() < k) {
        Node node = queue.top();
        queue.pop();
        out.push_back(node.solution);

        Eigen::MatrixXd work = node.cost;
        for (int i = 0; i < n; ++i) {
            const int col = node.solution.col_of_row[i];
            Eigen::MatrixXd child = work;
            child(i, col) = forbidden_cost;
            if (auto sol = solve_assignment(child)) queue.push(Node{*sol, std::move(child)});
            // Fix row i to its current column for the remaining partitions.
            const double keep = work(i, col);
            work.row(i).setConstant(forbidden_cost);
            work.col(col).setConstant(forbidden_cost);
            work(i, col) = keep;
        }
    }
    return out;
}

} // namespace cellmb
