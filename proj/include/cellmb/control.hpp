#pragma once

#include "cellmb/errors.hpp"
#include "cellmb/grid.hpp"
#include "cellmb/info_gain.hpp"
#include "cellmb/rfs.hpp"
#include "cellmb/sensor.hpp"
#include "cellmb/tracker.hpp"

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cellmb {

enum class PolicyKind { cellmb, pims, random };

inline std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::cellmb: return "cellmb";
    case PolicyKind::pims: return "pims";
    case PolicyKind::random: return "random";
    }
    return "unknown";
}

inline PolicyKind parse_policy(std::string_view s) {
    if (s == "cellmb") return PolicyKind::cellmb;
    if (s == "pims") return PolicyKind::pims;
    if (s == "random") return PolicyKind::random;
    throw ConfigError("unknown policy '" + std::string(s) + "'");
}

struct Policy {
    PolicyKind kind = PolicyKind::cellmb;
    std::size_t fov_width = 2;
    std::size_t fov_height = 2;
    std::uint64_t rng_seed = 0;
    /// Max anchor displacement per step in cells; nullopt = unconstrained.
    std::optional<std::size_t> max_step_cells;
};

/// Summed-area table of a per-cell field over the grid; window sums in O(1).
class SummedAreaTable {
public:
    SummedAreaTable(const CellGrid& grid, const std::vector<double>& values)
        : cols_(grid.n_cols()), sums_((grid.n_cols() + 1) * (grid.n_rows() + 1), 0.0) {
        for (std::size_t r = 0; r < grid.n_rows(); ++r)
            for (std::size_t c = 0; c < grid.n_cols(); ++c)
                at(r + 1, c + 1) = values[grid.index(c, r)] + at(r, c + 1) + at(r + 1, c) - at(r, c);
    }

    [[nodiscard]] double window(const Fov& f) const {
        const std::size_t r0 = f.anchor_row, c0 = f.anchor_col;
        const std::size_t r1 = r0 + f.height_cells, c1 = c0 + f.width_cells;
        return at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
    }

private:
    double& at(std::size_t r, std::size_t c) { return sums_[r * (cols_ + 1) + c]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return sums_[r * (cols_ + 1) + c]; }

    std::size_t cols_;
    std::vector<double> sums_;
};

namespace detail {

inline std::vector<Fov> placements_or_throw(const CellGrid& grid, std::size_t w, std::size_t h,
                                            const std::optional<MotionLimit>& limit) {
    auto placements = admissible_fovs(grid, w, h, limit);
    if (placements.empty()) throw ConfigError("no admissible field-of-view placement inside the field of regard");
    return placements;
}

} // namespace detail

/// Placement maximizing the windowed sum of discovered + undiscovered gains;
/// ties go to the lowest row-major anchor.
inline Fov select_fov_cellmb(const GainArrays& gains, const CellGrid& grid, std::size_t w, std::size_t h,
                             const std::optional<MotionLimit>& limit = std::nullopt) {
    const auto placements = detail::placements_or_throw(grid, w, h, limit);
    const SummedAreaTable sat(grid, gains.total());
    const Fov* best = &placements.front();
    double best_val = sat.window(*best);
    for (const auto& f : placements) {
        const double v = sat.window(f);
        if (v > best_val) {
            best_val = v;
            best = &f;
        }
    }
    return *best;
}

/// Predicted ideal measurement set of a placement: one noiseless position per
/// track with existence above threshold whose mean lies in the footprint.
inline std::vector<Vec2> ideal_measurement_set(const TrackSet& tracks, const CellGrid& grid, const Fov& fov,
                                               double threshold = 0.5) {
    const Rect rect = fov.rect(grid);
    std::vector<Vec2> z;
    for (const auto& t : tracks.tracks) {
        if (!(t.existence > threshold)) continue;
        Vec2 mean = Vec2::Zero();
        for (const auto& c : t.density.components()) mean += c.weight * c.mean.head<2>();
        if (rect.contains(mean)) z.push_back(mean);
    }
    return z;
}

/// PIMS score: discovered PHD-KLD gain of the ideal set plus the undiscovered
/// null-measurement gain over the footprint.
inline double pims_score(const TrackSet& tracks, const GaussianMixturePhd& discovered, const PiecewisePhd& undiscovered,
                         const SensorModel& sensor, const CellGrid& grid, const Fov& fov, std::size_t lattice_n = 32) {
    const auto mask = fov_mask(grid, fov);
    const auto z = ideal_measurement_set(tracks, grid, fov);
    double score = phd_kld_gain(std::span<const Vec2>(z), grid, mask, discovered, sensor, lattice_n);
    for (auto j : fov_cells(grid, fov)) score += undiscovered_null_gain(undiscovered.lambda(j), sensor.p_d(j), true);
    return score;
}

inline Fov select_fov_pims(const TrackSet& tracks, const PiecewisePhd& undiscovered, const SensorModel& sensor,
                           const CellGrid& grid, std::size_t w, std::size_t h, std::size_t lattice_n = 32,
                           const std::optional<MotionLimit>& limit = std::nullopt) {
    const auto placements = detail::placements_or_throw(grid, w, h, limit);
    const GaussianMixturePhd discovered = discovered_phd(tracks);
    std::vector<double> scores(placements.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(placements.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        scores[k] = pims_score(tracks, discovered, undiscovered, sensor, grid, placements[k], lattice_n);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return placements[best];
}

/// Uniform draw from the admissible placements.
template <class Rng>
Fov select_fov_random(const std::vector<Fov>& placements, Rng& rng) {
    if (placements.empty()) throw ConfigError("no admissible field-of-view placement to draw from");
    std::uniform_int_distribution<std::size_t> pick(0, placements.size() - 1);
    return placements[pick(rng)];
}

} // namespace cellmb
