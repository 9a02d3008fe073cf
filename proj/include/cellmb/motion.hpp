#pragma once

#include "cellmb/grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace cellmb {

/// Object state [x, y, vx, vy, turn rate]; positions in pixels, rates per second.
using StateVec = Eigen::Matrix<double, 5, 1>;
using StateMat = Eigen::Matrix<double, 5, 5>;
using NoiseGain = Eigen::Matrix<double, 5, 3>;

inline constexpr double arcmin_to_rad = std::numbers::pi / (180.0 * 60.0);

/// Nearly coordinated turn map over dt. Falls back to constant velocity when
/// the turn rate is below 1e-6 rad/s.
inline StateVec coordinated_turn(const StateVec& x, double dt) {
    const double w = x(4);
    StateVec out;
    if (std::abs(w) < 1e-6) {
        out << x(0) + dt * x(2), x(1) + dt * x(3), x(2), x(3), w;
        return out;
    }
    const double s = std::sin(w * dt);
    const double c = std::cos(w * dt);
    out << x(0) + s / w * x(2) - (1.0 - c) / w * x(3),
           x(1) + (1.0 - c) / w * x(2) + s / w * x(3),
           c * x(2) - s * x(3),
           s * x(2) + c * x(3),
           w;
    return out;
}

/// Coordinated-turn dynamics with process noise directed along the local road
/// direction: sigma_t along the road, sigma_n across it, sigma_turn on the turn
/// rate. road_angle holds one angle per grid cell (empty means angle 0 everywhere).
struct MotionModel {
    double dt = 1.0;
    double sigma_t = 1.0;
    double sigma_n = 1.0;
    double sigma_turn_arcmin = 30.0;
    double p_survival = 0.99;
    std::vector<double> road_angle;

    [[nodiscard]] double sigma_turn() const { return sigma_turn_arcmin * arcmin_to_rad; }

    [[nodiscard]] StateVec transition(const StateVec& x) const { return coordinated_turn(x, dt); }

    [[nodiscard]] NoiseGain noise_gain() const {
        NoiseGain G = NoiseGain::Zero();
        G(0, 0) = G(1, 1) = 0.5 * dt * dt;
        G(2, 0) = G(3, 1) = dt;
        G(4, 2) = dt;
        return G;
    }

    /// Q(s) for road angle psi: [D' Qd D, 0; 0, sigma_turn^2].
    [[nodiscard]] Eigen::Matrix3d noise_cov(double psi) const {
        Mat2 D;
        D << std::cos(psi), std::sin(psi), -std::sin(psi), std::cos(psi);
        const Mat2 Qd = Eigen::Vector2d(sigma_t * sigma_t, sigma_n * sigma_n).asDiagonal();
        Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
        Q.topLeftCorner<2, 2>() = D.transpose() * Qd * D;
        Q(2, 2) = sigma_turn() * sigma_turn();
        return Q;
    }

    [[nodiscard]] double road_angle_at(const CellGrid& grid, const Vec2& pos) const {
        if (road_angle.empty()) return 0.0;
        const auto j = grid.try_cell_of(pos);
        if (!j) {
            // Off-grid positions use the nearest cell.
            const Rect b = grid.bounds();
            const Vec2 eps = 1e-9 * grid.cell_size();
            return road_angle.at(grid.cell_of(pos.cwiseMax(b.lo).cwiseMin(b.hi - eps)));
        }
        return road_angle.at(*j);
    }

    /// Gamma Q(s) Gamma'.
    [[nodiscard]] StateMat process_cov(double psi) const {
        const NoiseGain G = noise_gain();
        return G * noise_cov(psi) * G.transpose();
    }
};

/// Symmetric unscented transform (alpha = 1, beta = 0, kappa = 0): 2n sigma
/// points at mean +- columns of sqrt(n P), equal weights 1/(2n).
template <class F>
std::pair<StateVec, StateMat> unscented_transform(const StateVec& mean, const StateMat& cov, F&& f) {
    constexpr int n = 5;
    const Eigen::LLT<StateMat> llt(static_cast<double>(n) * cov);
    StateMat root;
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        const Eigen::SelfAdjointEigenSolver<StateMat> es(static_cast<double>(n) * cov);
        root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    std::array<StateVec, 2 * n> pts;
    for (int i = 0; i < n; ++i) {
        pts[i] = f(StateVec(mean + root.col(i)));
        pts[n + i] = f(StateVec(mean - root.col(i)));
    }
    const double w = 1.0 / (2.0 * n);
    StateVec m = StateVec::Zero();
    for (const auto& p : pts) m += w * p;
    StateMat P = StateMat::Zero();
    for (const auto& p : pts) P += w * (p - m) * (p - m).transpose();
    return {m, 0.5 * (P + P.transpose())};
}

} // namespace cellmb
