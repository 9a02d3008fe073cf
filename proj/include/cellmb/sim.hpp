#pragma once

#include "cellmb/control.hpp"
#include "cellmb/errors.hpp"
#include "cellmb/gospa.hpp"
#include "cellmb/grid.hpp"
#include "cellmb/info_gain.hpp"
#include "cellmb/motion.hpp"
#include "cellmb/sensor.hpp"
#include "cellmb/tracker.hpp"
#include "cellmb/undiscovered.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cellmb {

/// From `step` on, the scripted object turns at `turn_rate` (rad/s) and, if
/// given, has its speed reset to `speed`.
struct ControlSegment {
    int step = 1;
    double turn_rate = 0.0;
    std::optional<double> speed;
};

/// Scripted ground-truth object, alive on steps birth_step..death_step.
struct ObjectScript {
    int birth_step = 1;
    int death_step = 1;
    StateVec initial = StateVec::Zero();
    std::vector<ControlSegment> controls;

    [[nodiscard]] bool alive_at(int step) const { return step >= birth_step && step <= death_step; }
};

struct Scenario {
    std::string name = "scenario";
    CellGrid grid;
    int duration = 0;
    std::vector<ObjectScript> objects;
    SensorModel sensor;
    MotionModel motion;
    /// Multiplier on the truth process noise (0 gives scripted trajectories).
    double truth_noise_scale = 1.0;
    std::vector<double> lambda_init;
    UndiscoveredModel undiscovered;
    Policy policy;
    std::size_t mc_runs = 1;
    std::uint64_t master_seed = 0;
    GospaParams gospa;
    TrackerConfig tracker;
    QuadratureConfig quadrature;
    std::size_t pims_lattice = 16;
    double estimate_threshold = 0.5;

    void validate() const {
        if (duration < 0) throw ConfigError("duration must be nonnegative");
        const std::size_t P = grid.num_cells();
        if (sensor.p_detect.size() != P) throw ConfigError("detection probabilities must have one entry per cell");
        if (!motion.road_angle.empty() && motion.road_angle.size() != P)
            throw ConfigError("road angles must have one entry per cell");
        if (lambda_init.size() != P) throw ConfigError("initial undiscovered intensity must have one entry per cell");
        if (undiscovered.lambda_birth.size() != P) throw ConfigError("birth intensity must have one entry per cell");
        try {
            undiscovered.validate();
            gospa.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        for (std::size_t j = 0; j < P; ++j) {
            if (!grid.in_roi(j) && (lambda_init[j] != 0.0 || undiscovered.lambda_birth[j] != 0.0))
                throw ConfigError("undiscovered intensity must vanish outside the ROI (cell " + std::to_string(j) + ")");
            if (lambda_init[j] < 0.0 || undiscovered.lambda_birth[j] < 0.0)
                throw ConfigError("undiscovered intensity must be nonnegative");
        }
        if (mc_runs == 0) throw ConfigError("at least one Monte-Carlo run is required");
        if (policy.fov_width == 0 || policy.fov_height == 0) throw ConfigError("field of view must be at least one cell");
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const auto& o = objects[i];
            const std::string tag = "object " + std::to_string(i) + ": ";
            if (!(o.birth_step >= 1 && o.birth_step < o.death_step && o.death_step <= duration))
                throw ConfigError(tag + "requires 1 <= birth < death <= duration");
            const auto j = grid.try_cell_of(o.initial.head<2>());
            if (!j || !grid.in_roi(*j)) throw ConfigError(tag + "initial position outside the ROI");
        }
    }
};

struct TruthObject {
    std::size_t id = 0;
    StateVec state = StateVec::Zero();
};

using GroundTruth = std::vector<TruthObject>;

/// Independent generators per consumer so that changing the policy does not
/// perturb the truth realization of a run.
struct RngStreams {
    std::mt19937_64 truth, detection, clutter, noise, policy;

    static RngStreams make(std::uint64_t master_seed, std::uint64_t run) {
        auto stream = [&](std::uint32_t tag) {
            std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                              static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32), tag};
            return std::mt19937_64(seq);
        };
        return RngStreams{stream(1), stream(2), stream(3), stream(4), stream(5)};
    }
};

namespace detail {

inline Eigen::Vector3d standard_normal3(std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    return {n01(rng), n01(rng), n01(rng)};
}

inline void apply_controls(const ObjectScript& script, int step, StateVec& x) {
    for (const auto& seg : script.controls) {
        if (seg.step != step) continue;
        x(4) = seg.turn_rate;
        if (seg.speed) {
            const double v = std::hypot(x(2), x(3));
            if (v > 0.0) {
                x(2) *= *seg.speed / v;
                x(3) *= *seg.speed / v;
            } else {
                x(2) = *seg.speed;
            }
        }
    }
}

} // namespace detail

/// One step of the truth process: newly born objects start at their scripted
/// state, survivors move by the coordinated-turn map plus directional process
/// noise Gamma nu, nu ~ N(0, Q(s)), and scripted controls are applied.
inline GroundTruth propagate_truth(const Scenario& sc, const GroundTruth& previous, int step, std::mt19937_64& rng) {
    if (step < 1 || step > sc.duration) throw std::out_of_range("step outside [1, duration]");
    GroundTruth next;
    const NoiseGain G = sc.motion.noise_gain();
    for (std::size_t id = 0; id < sc.objects.size(); ++id) {
        const auto& script = sc.objects[id];
        if (!script.alive_at(step)) continue;
        StateVec x;
        if (step == script.birth_step) {
            x = script.initial;
        } else {
            const auto it = std::find_if(previous.begin(), previous.end(), [&](const auto& t) { return t.id == id; });
            if (it == previous.end()) throw std::logic_error("object alive without a previous state");
            x = sc.motion.transition(it->state);
            if (sc.truth_noise_scale > 0.0) {
                const double psi = sc.motion.road_angle_at(sc.grid, it->state.head<2>());
                const Eigen::Matrix3d L = sc.motion.noise_cov(psi).llt().matrixL();
                x += sc.truth_noise_scale * (G * (L * detail::standard_normal3(rng)));
            }
        }
        detail::apply_controls(script, step, x);
        next.push_back(TruthObject{id, x});
    }
    return next;
}

/// Detections of in-footprint objects (probability p_D of their cell) with
/// Gaussian position noise, followed by Poisson clutter uniform over the
/// footprint.
inline std::vector<Vec2> synthesize_measurements(const GroundTruth& truth, const CellGrid& grid, const Fov& fov,
                                                 const SensorModel& sensor, std::mt19937_64& detection_rng,
                                                 std::mt19937_64& noise_rng, std::mt19937_64& clutter_rng) {
    const Rect rect = fov.rect(grid);
    const Mat2 L = sensor.meas_cov.llt().matrixL();
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01;
    std::vector<Vec2> z;
    for (const auto& t : truth) {
        const Vec2 pos = t.state.head<2>();
        if (!rect.contains(pos)) continue;
        const double pd = sensor.p_d(grid.cell_of(pos));
        if (!(u01(detection_rng) < pd)) continue;
        const Vec2 e(n01(noise_rng), n01(noise_rng));
        z.push_back(pos + L * e);
    }
    std::poisson_distribution<int> count(sensor.clutter_mean(rect.area()));
    const int nc = sensor.clutter_density > 0.0 ? count(clutter_rng) : 0;
    for (int i = 0; i < nc; ++i) {
        const double x = u01(clutter_rng), y = u01(clutter_rng);
        z.emplace_back(rect.lo.x() + x * rect.width(), rect.lo.y() + y * rect.height());
    }
    return z;
}

struct StepRecord {
    int step = 0;
    Fov fov;
    double gospa = 0.0;
    double localization = 0.0;
    std::size_t n_missed = 0;
    std::size_t n_false = 0;
    std::size_t n_tracks = 0;
    double sum_lambda = 0.0;
};

struct StepDiagnostics {
    int step = 0;
    GainArrays gains;
};

struct StepCheckpoint {
    int step = 0;
    TrackSet tracks;
    std::vector<double> lambda;
};

struct RunResult {
    std::size_t run = 0;
    PolicyKind policy = PolicyKind::cellmb;
    std::vector<StepRecord> steps;
    std::vector<StepDiagnostics> diagnostics;
    std::vector<StepCheckpoint> checkpoints;

    [[nodiscard]] double mean_gospa() const { return mean_of([](const StepRecord& s) { return s.gospa; }); }
    [[nodiscard]] double mean_missed() const { return mean_of([](const StepRecord& s) { return double(s.n_missed); }); }
    [[nodiscard]] double mean_false() const { return mean_of([](const StepRecord& s) { return double(s.n_false); }); }
    [[nodiscard]] double mean_localization() const { return mean_of([](const StepRecord& s) { return s.localization; }); }

private:
    template <class F>
    [[nodiscard]] double mean_of(F f) const {
        if (steps.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& s : steps) acc += f(s);
        return acc / static_cast<double>(steps.size());
    }
};

/// Mean and 95% Student-t half width of a sample.
struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
};

inline MeanCi mean_ci95(const std::vector<double>& x) {
    MeanCi out;
    if (x.empty()) return out;
    const double n = static_cast<double>(x.size());
    out.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    if (x.size() < 2) return out;
    double ss = 0.0;
    for (double v : x) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t t(n - 1.0);
    out.half_width = boost::math::quantile(t, 0.975) * sd / std::sqrt(n);
    return out;
}

struct PolicySummary {
    PolicyKind policy = PolicyKind::cellmb;
    std::size_t runs = 0;
    int steps = 0;
    MeanCi gospa, localization, missed, false_tracks;
};

inline PolicySummary summarize(const std::vector<RunResult>& runs, PolicyKind policy, int steps) {
    PolicySummary s;
    s.policy = policy;
    s.runs = runs.size();
    s.steps = steps;
    std::vector<double> g, l, m, f;
    for (const auto& r : runs) {
        g.push_back(r.mean_gospa());
        l.push_back(r.mean_localization());
        m.push_back(r.mean_missed());
        f.push_back(r.mean_false());
    }
    s.gospa = mean_ci95(g);
    s.localization = mean_ci95(l);
    s.missed = mean_ci95(m);
    s.false_tracks = mean_ci95(f);
    return s;
}

struct ExperimentResult {
    std::vector<RunResult> runs;
    PolicySummary summary;
};

struct ExperimentOptions {
    bool record_diagnostics = false;
    bool record_checkpoints = false;
};

/// Raised when a step of a run fails; carries the run and step indices.
class RunAbortedError : public std::runtime_error {
public:
    RunAbortedError(std::size_t run, int step, const std::string& what)
        : std::runtime_error("run " + std::to_string(run) + " aborted at step " + std::to_string(step) + ": " + what),
          run_(run), step_(step) {}

    [[nodiscard]] std::size_t run() const { return run_; }
    [[nodiscard]] int step() const { return step_; }

private:
    std::size_t run_;
    int step_;
};

inline double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

/// One Monte-Carlo run of the search-while-tracking loop. Per step: predict
/// tracks and lambda, choose the footprint with the scenario policy, observe,
/// split components straddling the footprint, update, then score against truth.
inline RunResult run_single(const Scenario& sc, std::size_t run, const ExperimentOptions& opts = {},
                            const UndiscoveredGainModel* gain_model = nullptr) {
    std::optional<UndiscoveredGainModel> own_model;
    const bool need_gains = sc.policy.kind == PolicyKind::cellmb || opts.record_diagnostics;
    if (need_gains && gain_model == nullptr) {
        own_model.emplace(sc.grid, sc.sensor, sc.quadrature);
        gain_model = &*own_model;
    }

    RunResult result;
    result.run = run;
    result.policy = sc.policy.kind;
    auto rng = RngStreams::make(sc.master_seed, run);

    GroundTruth truth;
    TrackSet tracks;
    std::vector<double> lambda = sc.lambda_init;
    std::optional<Fov> previous;

    for (int k = 1; k <= sc.duration; ++k) {
        try {
            truth = propagate_truth(sc, truth, k, rng.truth);
            tracks = predict_tracks(tracks, sc.motion, sc.grid);
            lambda = predict_undiscovered(lambda, sc.undiscovered);

            std::optional<MotionLimit> limit;
            if (previous && sc.policy.max_step_cells) limit = MotionLimit{*previous, *sc.policy.max_step_cells};

            std::optional<GainArrays> gains;
            const PiecewisePhd undiscovered(sc.grid, lambda);
            if (need_gains)
                gains = for_gain_arrays(sc.grid, discovered_phd(tracks), undiscovered, sc.sensor, sc.quadrature,
                                        *gain_model);

            Fov fov;
            switch (sc.policy.kind) {
            case PolicyKind::cellmb:
                fov = select_fov_cellmb(*gains, sc.grid, sc.policy.fov_width, sc.policy.fov_height, limit);
                break;
            case PolicyKind::pims:
                fov = select_fov_pims(tracks, undiscovered, sc.sensor, sc.grid, sc.policy.fov_width,
                                      sc.policy.fov_height, sc.pims_lattice, limit);
                break;
            case PolicyKind::random:
                fov = select_fov_random(
                    detail::placements_or_throw(sc.grid, sc.policy.fov_width, sc.policy.fov_height, limit), rng.policy);
                break;
            }
            previous = fov;

            const auto z = synthesize_measurements(truth, sc.grid, fov, sc.sensor, rng.detection, rng.noise, rng.clutter);
            tracks = split_for_fov(tracks, sc.grid, fov, sc.tracker);
            tracks = update_tracks(tracks, std::span<const Vec2>(z), sc.grid, fov, sc.sensor, sc.motion, sc.tracker, k);
            lambda = update_undiscovered(lambda, fov_mask(sc.grid, fov), sc.sensor.p_detect);

            const auto est = extract_estimates(tracks, sc.estimate_threshold);
            std::vector<Vec2> est_pos, truth_pos;
            for (const auto& e : est) est_pos.push_back(e.state.head<2>());
            const Rect scene = sc.grid.bounds();
            for (const auto& t : truth)
                if (scene.contains(t.state.head<2>())) truth_pos.push_back(t.state.head<2>());
            const auto g = gospa(est_pos, truth_pos, sc.gospa);

            result.steps.push_back(StepRecord{k, fov, g.total, g.localization, g.n_missed, g.n_false, est.size(),
                                              sum_of(lambda)});
            if (opts.record_diagnostics) result.diagnostics.push_back(StepDiagnostics{k, *gains});
            if (opts.record_checkpoints) result.checkpoints.push_back(StepCheckpoint{k, tracks, lambda});
        } catch (const RunAbortedError&) {
            throw;
        } catch (const std::exception& e) {
            throw RunAbortedError(run, k, e.what());
        }
    }
    return result;
}

/// All Monte-Carlo runs of the scenario. Runs are independent and execute in
/// parallel; results are ordered by run index and do not depend on the
/// thread count.
inline ExperimentResult run_experiment(const Scenario& sc, const ExperimentOptions& opts = {}) {
    sc.validate();
    std::optional<UndiscoveredGainModel> model;
    if (sc.policy.kind == PolicyKind::cellmb || opts.record_diagnostics)
        model.emplace(sc.grid, sc.sensor, sc.quadrature);
    const UndiscoveredGainModel* model_ptr = model ? &*model : nullptr;

    ExperimentResult out;
    out.runs.resize(sc.mc_runs);
    std::exception_ptr failure;
    std::size_t failed_run = sc.mc_runs;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sc.mc_runs); ++i) {
        const auto run = static_cast<std::size_t>(i);
        try {
            out.runs[run] = run_single(sc, run, opts, model_ptr);
        } catch (...) {
#pragma omp critical(cellmb_run_failure)
            {
                if (run < failed_run) {
                    failed_run = run;
                    failure = std::current_exception();
                }
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    out.summary = summarize(out.runs, sc.policy.kind, sc.duration);
    return out;
}

/// Per-policy summaries on shared truth streams plus the Table-I style
/// improvement (baseline - value) / value of each row over the baseline row.
struct ComparisonRow {
    PolicySummary summary;
    double gospa_improvement = 0.0;
    double missed_improvement = 0.0;
    double false_improvement = 0.0;
};

inline double percent_improvement(double baseline, double value) {
    if (value == 0.0) return baseline == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return 100.0 * (baseline - value) / value;
}

} // namespace cellmb
