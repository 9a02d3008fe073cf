#pragma once

#include "cellmb/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cellmb {

/// Cell-discretized PHD model of objects not yet detected: per-cell birth
/// rates, a survival probability, and a row-stochastic cell transition matrix
/// (row i holds P(j | i)).
struct UndiscoveredModel {
    std::vector<double> lambda_birth;
    double p_survival = 1.0;
    Eigen::MatrixXd transition;

    void validate() const {
        const auto P = static_cast<Eigen::Index>(lambda_birth.size());
        if (transition.rows() != P || transition.cols() != P)
            throw std::invalid_argument("transition matrix must be P x P");
        if ((transition.array() < 0.0).any()) throw std::invalid_argument("transition entries must be nonnegative");
        for (Eigen::Index i = 0; i < P; ++i)
            if (std::abs(transition.row(i).sum() - 1.0) > 1e-9)
                throw std::invalid_argument("transition row " + std::to_string(i) + " does not sum to one");
        if (!(p_survival >= 0.0 && p_survival <= 1.0)) throw std::invalid_argument("survival probability outside [0,1]");
    }
};

/// Nearest-neighbour diffusion inside the ROI: stay with weight `stay`, move to
/// each 4-neighbour in the ROI with weight `move`, rows renormalized. Cells
/// outside the ROI map to themselves.
inline Eigen::MatrixXd diffusion_transition(const CellGrid& grid, double stay = 0.6, double move = 0.1) {
    const auto P = static_cast<Eigen::Index>(grid.num_cells());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(P, P);
    for (CellIndex i = 0; i < grid.num_cells(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (!grid.in_roi(i)) {
            T(ii, ii) = 1.0;
            continue;
        }
        T(ii, ii) = stay;
        const auto c = static_cast<long>(grid.col(i));
        const auto r = static_cast<long>(grid.row(i));
        const long dirs[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
        for (const auto& d : dirs) {
            const long nc = c + d[0];
            const long nr = r + d[1];
            if (nc < 0 || nr < 0 || nc >= static_cast<long>(grid.n_cols()) || nr >= static_cast<long>(grid.n_rows()))
                continue;
            const CellIndex j = grid.index(static_cast<std::size_t>(nc), static_cast<std::size_t>(nr));
            if (grid.in_roi(j)) T(ii, static_cast<Eigen::Index>(j)) = move;
        }
        T.row(ii) /= T.row(ii).sum();
    }
    return T;
}

/// lambda_j <- lambda_B,j + sum_i p_S P(j | i) lambda_i.
inline std::vector<double> predict_undiscovered(const std::vector<double>& lambdas, const UndiscoveredModel& model) {
    const auto P = static_cast<Eigen::Index>(lambdas.size());
    if (model.transition.rows() != P || static_cast<Eigen::Index>(model.lambda_birth.size()) != P)
        throw std::invalid_argument("undiscovered model does not match the intensity vector");
    const Eigen::Map<const Eigen::VectorXd> lam(lambdas.data(), P);
    const Eigen::VectorXd moved = model.transition.transpose() * (model.p_survival * lam);
    std::vector<double> out(lambdas.size());
    for (Eigen::Index j = 0; j < P; ++j) out[static_cast<std::size_t>(j)] = model.lambda_birth[static_cast<std::size_t>(j)] + moved(j);
    return out;
}

/// lambda_j <- (1 - p_D,j) lambda_j for cells in the footprint; others unchanged.
inline std::vector<double> update_undiscovered(const std::vector<double>& lambdas, const std::vector<bool>& fov,
                                               const std::vector<double>& p_detect) {
    if (fov.size() != lambdas.size() || p_detect.size() != lambdas.size())
        throw std::invalid_argument("footprint / detection vectors do not match the intensity vector");
    std::vector<double> out = lambdas;
    for (std::size_t j = 0; j < out.size(); ++j)
        if (fov[j]) out[j] *= 1.0 - p_detect[j];
    return out;
}

} // namespace cellmb
