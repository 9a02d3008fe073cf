#pragma once

#include "cellmb/assignment.hpp"
#include "cellmb/gaussian.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cellmb {

struct GospaParams {
    double c = 20.0;
    double p = 2.0;
    double alpha = 2.0;

    void validate() const {
        if (!(c > 0.0)) throw std::invalid_argument("GOSPA cutoff must be positive");
        if (!(p >= 1.0)) throw std::invalid_argument("GOSPA order must be >= 1");
        if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("GOSPA alpha must lie in (0, 2]");
    }
};

struct GospaResult {
    double total = 0.0;
    /// (sum of matched distances^p)^(1/p) over pairs closer than the cutoff.
    double localization = 0.0;
    std::size_t n_missed = 0;
    std::size_t n_false = 0;
};

/// GOSPA distance between estimated and true positions with an optimal
/// assignment. For alpha = 2 the value decomposes as
/// total^p = localization^p + c^p / 2 (missed + false).
inline GospaResult gospa(const std::vector<Vec2>& estimates, const std::vector<Vec2>& truth, const GospaParams& params) {
    params.validate();
    const double cp = std::pow(params.c, params.p);
    GospaResult out;
    const bool est_rows = estimates.size() <= truth.size();
    const auto& rows = est_rows ? estimates : truth;
    const auto& cols = est_rows ? truth : estimates;

    double assigned_cost = 0.0;
    double loc_p = 0.0;
    std::size_t matched = 0;
    if (!rows.empty()) {
        Eigen::MatrixXd cost(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t k = 0; k < cols.size(); ++k)
                cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    std::pow(std::min((rows[i] - cols[k]).norm(), params.c), params.p);
        const auto sol = solve_assignment(cost);
        if (!sol) throw std::logic_error("GOSPA assignment infeasible");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double d = (rows[i] - cols[static_cast<std::size_t>(sol->col_of_row[i])]).norm();
            assigned_cost += std::pow(std::min(d, params.c), params.p);
            if (d < params.c) {
                loc_p += std::pow(d, params.p);
                ++matched;
            }
        }
    }
    const double card = static_cast<double>(cols.size() - rows.size());
    out.total = std::pow(assigned_cost + cp / params.alpha * card, 1.0 / params.p);
    out.localization = std::pow(loc_p, 1.0 / params.p);
    out.n_missed = truth.size() - matched;
    out.n_false = estimates.size() - matched;
    return out;
}

} // namespace cellmb
