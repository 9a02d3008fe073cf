#pragma once

#include "cellmb/sim.hpp"

namespace cellmb::testing {

/// A 4 x 4 grid of 20 px cells with two crossing vehicles. Small enough for
/// every policy to finish a short run in well under a second.
inline Scenario tiny_scenario(PolicyKind policy = PolicyKind::cellmb, int duration = 8) {
    Scenario sc;
    sc.name = "tiny";
    sc.grid = CellGrid(Vec2(0, 0), Vec2(20, 20), 4, 4);
    sc.duration = duration;
    sc.sensor = SensorModel::uniform(sc.grid, 4.0, 0.9, 3.0);
    sc.motion.sigma_t = 0.3;
    sc.motion.sigma_n = 0.05;
    sc.motion.sigma_turn_arcmin = 30.0;
    sc.motion.p_survival = 0.99;
    sc.motion.road_angle.assign(16, 0.0);
    sc.lambda_init.assign(16, 0.1);
    sc.undiscovered.lambda_birth.assign(16, 0.002);
    sc.undiscovered.p_survival = 0.99;
    sc.undiscovered.transition = diffusion_transition(sc.grid);
    sc.policy.kind = policy;
    sc.policy.fov_width = 2;
    sc.policy.fov_height = 2;
    sc.mc_runs = 3;
    sc.master_seed = 42;
    sc.quadrature.lattice_n = 8;
    sc.quadrature.r_max = 4;
    sc.pims_lattice = 8;
    sc.tracker.merge_distance = 2.0;
    sc.tracker.max_components = 16;

    if (duration >= 2) {
        ObjectScript a;
        a.birth_step = 1;
        a.death_step = duration;
        a.initial << 5, 30, 1.5, 0, 0;
        ObjectScript b;
        b.birth_step = 1;
        b.death_step = std::max(2, duration / 2);
        b.initial << 50, 5, 0, 1.5, 0;
        sc.objects = {a, b};
    }
    return sc;
}

} // namespace cellmb::testing
