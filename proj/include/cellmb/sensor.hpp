#pragma once

#include "cellmb/gaussian.hpp"
#include "cellmb/grid.hpp"

#include <Eigen/Dense>
#include <vector>

namespace cellmb {

/// Linear-Gaussian position sensor with a cell-aligned footprint.
///
/// Measurements are z = H x + v, v ~ N(0, R), where H extracts the position.
/// Inside the footprint a point in cell j is detected with probability
/// p_detect[j]; clutter is Poisson with uniform intensity clutter_density per
/// unit measurement area.
struct SensorModel {
    Mat2 meas_cov = Mat2::Identity();
    std::vector<double> p_detect;
    double clutter_density = 0.0;

    static SensorModel uniform(const CellGrid& grid, double meas_var, double p_d, double clutter_per_frame) {
        SensorModel s;
        s.meas_cov = meas_var * Mat2::Identity();
        s.p_detect.assign(grid.num_cells(), p_d);
        s.clutter_density = clutter_per_frame / grid.bounds().area();
        return s;
    }

    [[nodiscard]] double p_d(CellIndex j) const { return p_detect.at(j); }

    /// p_D(s; S): zero outside the footprint mask and outside the grid.
    [[nodiscard]] double p_d_at(const CellGrid& grid, const std::vector<bool>& fov, const Vec2& s) const {
        const auto j = grid.try_cell_of(s);
        if (!j || !fov[*j]) return 0.0;
        return p_detect[*j];
    }

    [[nodiscard]] double clutter_mean(double area) const { return clutter_density * area; }

    /// Position extraction [I_2 0] for a state of the given dimension.
    [[nodiscard]] static Eigen::MatrixXd measurement_matrix(Eigen::Index state_dim) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, state_dim);
        H(0, 0) = 1.0;
        H(1, 1) = 1.0;
        return H;
    }
};

} // namespace cellmb
