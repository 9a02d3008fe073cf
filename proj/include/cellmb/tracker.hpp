#pragma once

#include "cellmb/assignment.hpp"
#include "cellmb/errors.hpp"
#include "cellmb/grid.hpp"
#include "cellmb/motion.hpp"
#include "cellmb/rfs.hpp"
#include "cellmb/sensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cellmb {

/// Track label: birth step and index among the tracks born at that step.
struct Label {
    int birth_step = 0;
    int index = 0;

    auto operator<=>(const Label&) const = default;
};

/// Labeled Bernoulli track with a Gaussian-mixture state density of unit mass.
struct Track {
    Label label;
    double existence = 0.0;
    GaussianMixturePhd density;
};

struct TrackSet {
    std::vector<Track> tracks;

    [[nodiscard]] std::size_t size() const { return tracks.size(); }
    [[nodiscard]] bool empty() const { return tracks.empty(); }
};

struct TrackerConfig {
    std::size_t k_best = 10;
    double birth_existence = 0.3;
    double birth_velocity_sd = 3.0;
    /// Birth turn-rate standard deviation in arcmin/s; negative means "use the
    /// motion model's turn-rate noise".
    double birth_turn_sd_arcmin = -1.0;
    double gate_distance = 5.0;
    double prune_weight = 1e-5;
    /// Mahalanobis distance below which components are merged.
    double merge_distance = 0.5;
    std::size_t max_components = 50;
    double min_existence = 1e-3;

    int split_max_depth = 4;
    double split_inside_fraction = 0.99;
    /// Child offset along the split direction, in units of the parent's
    /// standard deviation on that axis.
    double split_offset = 0.8;
};

namespace detail {

inline Eigen::Matrix<double, 2, 5> position_map() {
    Eigen::Matrix<double, 2, 5> H = Eigen::Matrix<double, 2, 5>::Zero();
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
    return H;
}

inline GaussianComponent make_component(double w, const StateVec& m, const StateMat& P, int depth = 0) {
    GaussianComponent c;
    c.weight = w;
    c.mean = m;
    c.cov = 0.5 * (P + P.transpose());
    c.split_depth = depth;
    return c;
}

/// Prune, merge and cap a mixture, then renormalize it to unit weight.
inline std::vector<GaussianComponent> tidy_mixture(std::vector<GaussianComponent> comps, const TrackerConfig& cfg) {
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    if (!(total > 0.0)) return {};
    std::vector<GaussianComponent> kept;
    for (auto& c : comps) {
        c.weight /= total;
        if (c.weight >= cfg.prune_weight) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });

    std::vector<GaussianComponent> merged;
    std::vector<char> used(kept.size(), 0);
    const double thr2 = cfg.merge_distance * cfg.merge_distance;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (used[i]) continue;
        const Eigen::MatrixXd info = kept[i].cov.inverse();
        std::vector<std::size_t> group;
        for (std::size_t k = i; k < kept.size(); ++k) {
            if (used[k]) continue;
            const Eigen::VectorXd d = kept[k].mean - kept[i].mean;
            if (d.dot(info * d) < thr2) group.push_back(k);
        }
        if (group.size() == 1) {
            used[i] = 1;
            merged.push_back(kept[i]);
            continue;
        }
        double w = 0.0;
        Eigen::VectorXd m = Eigen::VectorXd::Zero(kept[i].mean.size());
        for (auto k : group) {
            w += kept[k].weight;
            m += kept[k].weight * kept[k].mean;
        }
        m /= w;
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m.size(), m.size());
        int depth = 0;
        for (auto k : group) {
            const Eigen::VectorXd d = kept[k].mean - m;
            P += kept[k].weight * (kept[k].cov + d * d.transpose());
            depth = std::max(depth, kept[k].split_depth);
            used[k] = 1;
        }
        P /= w;
        GaussianComponent c;
        c.weight = w;
        c.mean = m;
        c.cov = 0.5 * (P + P.transpose());
        c.split_depth = depth;
        merged.push_back(std::move(c));
    }
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });
    if (merged.size() > cfg.max_components) merged.resize(cfg.max_components);
    total = 0.0;
    for (const auto& c : merged) total += c.weight;
    for (auto& c : merged) c.weight /= total;
    return merged;
}

} // namespace detail

/// Time update: existence scaled by the survival probability and every
/// component pushed through the coordinated-turn map by the unscented
/// transform, plus the directional process noise at the component's cell.
inline TrackSet predict_tracks(const TrackSet& tracks, const MotionModel& motion, const CellGrid& grid) {
    TrackSet out;
    out.tracks.reserve(tracks.size());
    for (const auto& t : tracks.tracks) {
        std::vector<GaussianComponent> comps;
        comps.reserve(t.density.size());
        for (const auto& c : t.density.components()) {
            const StateVec m = c.mean;
            const StateMat P = c.cov;
            auto [mp, Pp] = unscented_transform(m, P, [&](const StateVec& x) { return motion.transition(x); });
            Pp += motion.process_cov(motion.road_angle_at(grid, m.head<2>()));
            comps.push_back(detail::make_component(c.weight, mp, Pp));
        }
        out.tracks.push_back(Track{t.label, t.existence * motion.p_survival, GaussianMixturePhd(std::move(comps))});
    }
    return out;
}

namespace detail {

inline void split_component(const GaussianComponent& c, const Rect& fov, const TrackerConfig& cfg,
                            std::vector<GaussianComponent>& out) {
    const Gauss2 pos(c.mean.head<2>(), c.cov.topLeftCorner<2, 2>());
    const double inside = rect_mass(pos, fov);
    if (c.split_depth >= cfg.split_max_depth || inside >= cfg.split_inside_fraction ||
        inside <= 1.0 - cfg.split_inside_fraction) {
        out.push_back(c);
        return;
    }
    // Split along the axis whose FoV edges cut the marginal most evenly.
    const double sx = std::sqrt(c.cov(0, 0));
    const double sy = std::sqrt(c.cov(1, 1));
    const double fx = normal_interval_mass(c.mean(0), sx, fov.lo.x(), fov.hi.x());
    const double fy = normal_interval_mass(c.mean(1), sy, fov.lo.y(), fov.hi.y());
    const int axis = std::min(fx, 1.0 - fx) >= std::min(fy, 1.0 - fy) ? 0 : 1;

    const Eigen::VectorXd v = c.cov.col(axis) / std::sqrt(c.cov(axis, axis));
    const double d = cfg.split_offset;
    const Eigen::MatrixXd child_cov = c.cov - d * d * v * v.transpose();
    for (double sign : {-1.0, 1.0}) {
        GaussianComponent child;
        child.weight = 0.5 * c.weight;
        child.mean = c.mean + sign * d * v;
        child.cov = 0.5 * (child_cov + child_cov.transpose());
        child.split_depth = c.split_depth + 1;
        split_component(child, fov, cfg, out);
    }
}

} // namespace detail

/// Replaces every component whose position mass is neither >= 99% inside nor
/// >= 99% outside the footprint by a moment-preserving binary split, recursing
/// until the components separate or the depth limit is reached. Each split
/// preserves the mixture's weight, mean and covariance exactly.
inline TrackSet split_for_fov(const TrackSet& tracks, const CellGrid& grid, const Fov& fov,
                              const TrackerConfig& cfg = {}) {
    const Rect rect = fov.rect(grid);
    TrackSet out;
    out.tracks.reserve(tracks.size());
    for (const auto& t : tracks.tracks) {
        std::vector<GaussianComponent> comps;
        for (const auto& c : t.density.components()) detail::split_component(c, rect, cfg, comps);
        out.tracks.push_back(Track{t.label, t.existence, GaussianMixturePhd(std::move(comps))});
    }
    return out;
}

/// Measurement update of the labeled multi-Bernoulli track set.
///
/// The joint association of in-footprint tracks to measurements (or to a
/// miss) is ranked with Murty's algorithm; the k best hypotheses are collapsed
/// back to one Bernoulli per track. The detection probability of each
/// component is frozen at its mean. Measurements left unexplained spawn new
/// tracks whose existence is the birth existence times the probability that
/// the measurement was unassigned.
inline TrackSet update_tracks(const TrackSet& tracks, std::span<const Vec2> z_set, const CellGrid& grid,
                              const Fov& fov, const SensorModel& sensor, const MotionModel& motion,
                              const TrackerConfig& cfg, int step) {
    const auto H = detail::position_map();
    const std::vector<bool> mask = fov_mask(grid, fov);
    const double kappa = std::max(sensor.clutter_density, std::numeric_limits<double>::min());
    const double tiny = std::numeric_limits<double>::min();
    const std::size_t m = z_set.size();

    struct Detected {
        std::vector<GaussianComponent> comps;
        double log_eta = -std::numeric_limits<double>::infinity();
    };
    struct TrackTerms {
        std::vector<GaussianComponent> miss;
        double q_miss = 1.0;
        double log_eta_miss = 0.0;
        std::vector<Detected> det;
    };

    std::vector<std::size_t> active;
    std::vector<TrackTerms> terms;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const Track& t = tracks.tracks[i];
        std::vector<double> pd(t.density.size());
        bool any = false;
        for (std::size_t c = 0; c < t.density.size(); ++c) {
            pd[c] = sensor.p_d_at(grid, mask, t.density.position_marginals()[c].mean());
            any = any || pd[c] > 0.0;
        }
        if (!any) continue;
        active.push_back(i);
        TrackTerms tt;
        tt.q_miss = 0.0;
        for (std::size_t c = 0; c < t.density.size(); ++c) {
            const auto& comp = t.density.components()[c];
            tt.q_miss += comp.weight * (1.0 - pd[c]);
            GaussianComponent mc = comp;
            mc.weight = comp.weight * (1.0 - pd[c]);
            tt.miss.push_back(std::move(mc));
        }
        tt.log_eta_miss = std::log(std::max(1.0 - t.existence + t.existence * tt.q_miss, tiny));
        tt.det.resize(m);
        for (std::size_t zi = 0; zi < m; ++zi) {
            double lik = 0.0;
            for (std::size_t c = 0; c < t.density.size(); ++c) {
                if (pd[c] == 0.0) continue;
                const auto& comp = t.density.components()[c];
                const StateVec x = comp.mean;
                const StateMat P = comp.cov;
                const Mat2 S = H * P * H.transpose() + sensor.meas_cov;
                const Vec2 nu = z_set[zi] - H * x;
                const Mat2 S_inv = S.inverse();
                const double d2 = nu.dot(S_inv * nu);
                if (d2 > cfg.gate_distance * cfg.gate_distance) continue;
                const double l = comp.weight * pd[c] * std::exp(-0.5 * d2) / (2.0 * std::numbers::pi * std::sqrt(S.determinant()));
                if (!(l > 0.0)) continue;
                const Eigen::Matrix<double, 5, 2> K = P * H.transpose() * S_inv;
                const StateMat IKH = StateMat::Identity() - K * H;
                const StateMat Pu = IKH * P * IKH.transpose() + K * sensor.meas_cov * K.transpose();
                tt.det[zi].comps.push_back(detail::make_component(l, x + K * nu, Pu));
                lik += l;
            }
            if (lik > 0.0) tt.det[zi].log_eta = std::log(t.existence) + std::log(lik) - std::log(kappa);
        }
        terms.push_back(std::move(tt));
    }

    const std::size_t n = active.size();
    std::vector<Assignment> hyps;
    if (n > 0) {
        Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + n),
                                                         forbidden_cost);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t zi = 0; zi < m; ++zi)
                if (std::isfinite(terms[a].det[zi].log_eta)) cost(a, zi) = -terms[a].det[zi].log_eta;
            cost(a, m + a) = -terms[a].log_eta_miss;
        }
        hyps = k_best_assignments(cost, cfg.k_best);
        if (hyps.empty()) throw std::logic_error("track update produced no feasible association hypothesis");
    }

    std::vector<double> hw(hyps.size());
    if (!hyps.empty()) {
        const double best = hyps.front().cost;
        double total = 0.0;
        for (std::size_t h = 0; h < hyps.size(); ++h) total += hw[h] = std::exp(-(hyps[h].cost - best));
        for (auto& w : hw) w /= total;
    }

    TrackSet out;
    std::vector<char> is_active(tracks.size(), 0);
    for (auto i : active) is_active[i] = 1;
    for (std::size_t i = 0; i < tracks.size(); ++i)
        if (!is_active[i]) out.tracks.push_back(tracks.tracks[i]);

    for (std::size_t a = 0; a < n; ++a) {
        const Track& t = tracks.tracks[active[a]];
        const TrackTerms& tt = terms[a];
        const double miss_exist = t.existence * tt.q_miss / std::exp(tt.log_eta_miss);
        std::map<int, double> assoc_weight;
        for (std::size_t h = 0; h < hyps.size(); ++h) assoc_weight[hyps[h].col_of_row[a]] += hw[h];

        double r_post = 0.0;
        std::vector<GaussianComponent> comps;
        for (const auto& [col, w] : assoc_weight) {
            const bool miss = col >= static_cast<int>(m);
            const double rho = miss ? miss_exist : 1.0;
            const double mass = w * rho;
            if (!(mass > 0.0)) continue;
            r_post += mass;
            const auto& src = miss ? tt.miss : tt.det[static_cast<std::size_t>(col)].comps;
            double total = 0.0;
            for (const auto& c : src) total += c.weight;
            if (!(total > 0.0)) continue;
            for (auto c : src) {
                c.weight = mass * c.weight / total;
                comps.push_back(std::move(c));
            }
        }
        r_post = std::clamp(r_post, 0.0, 1.0);
        if (r_post < cfg.min_existence) continue;
        auto tidy = detail::tidy_mixture(std::move(comps), cfg);
        if (tidy.empty()) continue;
        out.tracks.push_back(Track{t.label, r_post, GaussianMixturePhd(std::move(tidy))});
    }

    // Measurement-driven birth.
    const double turn_sd = (cfg.birth_turn_sd_arcmin >= 0.0 ? cfg.birth_turn_sd_arcmin : motion.sigma_turn_arcmin) *
                           arcmin_to_rad;
    int index = 0;
    for (std::size_t zi = 0; zi < m; ++zi) {
        double unassigned = 1.0;
        if (!hyps.empty()) {
            unassigned = 0.0;
            for (std::size_t h = 0; h < hyps.size(); ++h) {
                const auto& cols = hyps[h].col_of_row;
                if (std::find(cols.begin(), cols.end(), static_cast<int>(zi)) == cols.end()) unassigned += hw[h];
            }
        }
        const double r_birth = cfg.birth_existence * unassigned;
        if (r_birth < cfg.min_existence) continue;
        StateVec x = StateVec::Zero();
        x.head<2>() = z_set[zi];
        StateMat P = StateMat::Zero();
        P.topLeftCorner<2, 2>() = sensor.meas_cov;
        P(2, 2) = P(3, 3) = cfg.birth_velocity_sd * cfg.birth_velocity_sd;
        P(4, 4) = std::max(turn_sd * turn_sd, 1e-12);
        std::vector<GaussianComponent> comps{detail::make_component(1.0, x, P)};
        out.tracks.push_back(Track{Label{step, index++}, r_birth, GaussianMixturePhd(std::move(comps))});
    }
    return out;
}

/// Intensity of the track set: sum over tracks of existence times density.
inline GaussianMixturePhd discovered_phd(const TrackSet& tracks) {
    std::vector<GaussianComponent> comps;
    for (const auto& t : tracks.tracks) {
        for (auto c : t.density.components()) {
            c.weight *= t.existence;
            comps.push_back(std::move(c));
        }
    }
    return GaussianMixturePhd(std::move(comps));
}

struct Estimate {
    Label label;
    StateVec state;
};

/// Tracks with existence above threshold, reported at the mean of their
/// highest-weight component.
inline std::vector<Estimate> extract_estimates(const TrackSet& tracks, double threshold = 0.5) {
    std::vector<Estimate> out;
    for (const auto& t : tracks.tracks) {
        if (!(t.existence > threshold) || t.density.empty()) continue;
        const auto& comps = t.density.components();
        const auto best = std::max_element(comps.begin(), comps.end(),
                                           [](const auto& a, const auto& b) { return a.weight < b.weight; });
        out.push_back(Estimate{t.label, StateVec(best->mean)});
    }
    return out;
}

} // namespace cellmb
