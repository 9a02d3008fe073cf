#pragma once

// Self-check suites run by `cellmb verify`. Each compares a library result
// against an independent oracle (brute-force enumeration, dense quadrature,
// closed-form filter recursions, exhaustive assignment) and reports the
// measured error next to its tolerance.

#include "cellmb/gospa.hpp"
#include "cellmb/info_gain.hpp"
#include "cellmb/rfs.hpp"
#include "cellmb/sensor.hpp"
#include "cellmb/tracker.hpp"
#include "cellmb/undiscovered.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cellmb::verify {

struct CheckResult {
    std::string suite;
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

inline CheckResult check_le(std::string suite, std::string name, double measured, double tolerance) {
    return CheckResult{std::move(suite), std::move(name), measured, tolerance, std::isfinite(measured) && measured <= tolerance};
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"thm1", "prop1", "additivity", "nullgain", "filters", "gospa", "quadrature"};
    return names;
}

inline bool is_suite(std::string_view s) {
    if (s == "all") return true;
    const auto& n = suite_names();
    return std::find(n.begin(), n.end(), s) != n.end();
}

namespace detail {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

/// Gain of a measurement set computed cell by cell, R(Z) = sum_j R(Z n Z_j; S_j),
/// the cell-additive form whose expectation has a closed form under a cell-MB
/// measurement density.
class CellAdditiveGain {
public:
    CellAdditiveGain(const PiecewisePhd& prior, const CellGrid& grid, const SensorModel& sensor, std::size_t lattice_n)
        : grid_(&grid) {
        for (CellIndex j = 0; j < grid.num_cells(); ++j) {
            std::vector<bool> single(grid.num_cells(), false);
            single[j] = true;
            cells_.emplace_back(prior, grid, single, sensor, lattice_n);
        }
    }

    [[nodiscard]] double cell_gain(CellIndex j, std::span<const Vec2> z) const { return cells_[j](z); }

    [[nodiscard]] double operator()(std::span<const Vec2> z) const {
        double total = 0.0;
        std::vector<Vec2> zj;
        for (CellIndex j = 0; j < grid_->num_cells(); ++j) {
            zj.clear();
            for (const auto& v : z)
                if (grid_->cell_rect(j).contains(v)) zj.push_back(v);
            total += cells_[j](std::span<const Vec2>(zj));
        }
        return total;
    }

private:
    const CellGrid* grid_;
    std::vector<KldGainEvaluator<PiecewisePhd>> cells_;
};

inline double gauss_pdf(const Vec2& x, const Vec2& m, const Mat2& P) {
    const Vec2 d = x - m;
    const double det = P(0, 0) * P(1, 1) - P(0, 1) * P(1, 0);
    const double q = (P(1, 1) * d.x() * d.x() - 2.0 * P(0, 1) * d.x() * d.y() + P(0, 0) * d.y() * d.y()) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

/// Composite 16-point Gauss-Legendre tensor rule over a rectangle.
template <class F>
double integrate_rect(F&& f, const Rect& r, int panels) {
    using gl = boost::math::quadrature::gauss<double, 16>;
    const double hx = r.width() / panels, hy = r.height() / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i)
        for (int k = 0; k < panels; ++k) {
            const double x0 = r.lo.x() + i * hx, y0 = r.lo.y() + k * hy;
            total += gl::integrate([&](double x) { return gl::integrate([&](double y) { return f(Vec2(x, y)); }, y0, y0 + hy); },
                                   x0, x0 + hx);
        }
    return total;
}

inline Mat2 random_cov(std::mt19937_64& rng, double sd_lo, double sd_hi, double max_corr) {
    std::uniform_real_distribution<double> sd(sd_lo, sd_hi), rho(-max_corr, max_corr);
    const double a = sd(rng), b = sd(rng), c = rho(rng);
    Mat2 P;
    P << a * a, c * a * b, c * a * b, b * b;
    return P;
}

inline GaussianComponent position_component(double w, const Vec2& m, const Mat2& P) {
    GaussianComponent c;
    c.weight = w;
    c.mean = m;
    c.cov = P;
    return c;
}

} // namespace detail

/// Closed-form cell-MB expectation against brute-force enumeration of every
/// occupancy pattern and lattice placement.
inline std::vector<CheckResult> suite_thm1(double tol_scale = 1.0, std::size_t instances = 100) {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> pick_p(2, 4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    const std::size_t brute_lattice = 4;
    for (std::size_t it = 0; it < instances; ++it) {
        const auto P = static_cast<std::size_t>(pick_p(rng));
        const CellGrid grid(Vec2::Zero(), Vec2(10.0, 10.0), P, 1);
        SensorModel sensor = SensorModel::uniform(grid, 1.0 + 3.0 * u01(rng), 0.6 + 0.39 * u01(rng), 0.0);
        sensor.clutter_density = 1e-3 + 1e-2 * u01(rng);
        std::vector<double> lam(P);
        for (auto& l : lam) l = 0.05 + 0.9 * u01(rng);
        const PiecewisePhd prior(grid, lam);

        // Measurement cell-MB: r in [0, 0.9], spatial density piecewise
        // constant on the 2 x 2 quadrants of each cell.
        std::vector<double> r(P);
        std::vector<std::array<double, 4>> quad(P);
        for (std::size_t j = 0; j < P; ++j) {
            r[j] = 0.9 * u01(rng);
            double s = 0.0;
            for (auto& q : quad[j]) s += (q = 0.1 + u01(rng));
            for (auto& q : quad[j]) q /= s;
        }
        auto source = [grid, r, quad](const Vec2& y) {
            const auto j = grid.try_cell_of(y);
            if (!j) return 0.0;
            const Rect c = grid.cell_rect(*j);
            const int qx = y.x() >= c.center().x() ? 1 : 0;
            const int qy = y.y() >= c.center().y() ? 1 : 0;
            return r[*j] * quad[*j][qy * 2 + qx] / (0.25 * c.area());
        };
        const CellMb cellmb(grid, r, source);
        const detail::CellAdditiveGain gain(prior, grid, sensor, 8);

        std::vector<double> null(P), cond(P);
        for (CellIndex j = 0; j < P; ++j) {
            null[j] = gain.cell_gain(j, {});
            const auto lat = cell_lattice_density(cellmb, j, brute_lattice);
            for (std::size_t l = 0; l < lat.points.size(); ++l)
                cond[j] += lat.weights[l] * gain.cell_gain(j, std::span<const Vec2>(&lat.points[l], 1));
        }
        const double closed = expected_gain_cellmb(cellmb, null, cond);
        const double brute =
            brute_force_expected_gain(cellmb, [&](std::span<const Vec2> z) { return gain(z); }, brute_lattice);
        worst = std::max(worst, detail::rel_err(closed, brute));
    }
    return {check_le("thm1", "closed form vs brute force, max relative error over " + std::to_string(instances) + " instances",
                     worst, 1e-6 * tol_scale)};
}

/// Cell-MB fit of random Gaussian-mixture intensities on a 4 x 4 grid.
inline std::vector<CheckResult> suite_prop1(double tol_scale = 1.0, std::size_t instances = 20) {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const CellGrid grid(Vec2::Zero(), Vec2(10.0, 10.0), 4, 4);
    double worst_mass = 0.0, worst_point = 0.0;
    for (std::size_t it = 0; it < instances; ++it) {
        const int n = 1 + static_cast<int>(u01(rng) * 6);
        std::vector<Vec2> means;
        std::vector<Mat2> covs;
        std::vector<double> w;
        for (int i = 0; i < n; ++i) {
            means.emplace_back(40.0 * u01(rng), 40.0 * u01(rng));
            covs.push_back(detail::random_cov(rng, 1.5, 5.0, 0.6));
            w.push_back(0.1 + 0.6 * u01(rng));
        }
        auto oracle_density = [&](const Vec2& y) {
            double d = 0.0;
            for (int i = 0; i < n; ++i) d += w[i] * detail::gauss_pdf(y, means[i], covs[i]);
            return d;
        };
        std::vector<double> oracle_mass(grid.num_cells());
        double max_mass = 0.0;
        for (CellIndex j = 0; j < grid.num_cells(); ++j) {
            oracle_mass[j] = detail::integrate_rect(oracle_density, grid.cell_rect(j), 6);
            max_mass = std::max(max_mass, oracle_mass[j]);
        }
        if (max_mass > 1.0) {
            for (auto& wi : w) wi /= max_mass;
            for (auto& m : oracle_mass) m /= max_mass;
        }
        std::vector<GaussianComponent> comps;
        for (int i = 0; i < n; ++i) comps.push_back(detail::position_component(w[i], means[i], covs[i]));
        const GaussianMixturePhd phd(comps);
        const CellMb fit = fit_cell_mb(phd, grid);
        for (CellIndex j = 0; j < grid.num_cells(); ++j) {
            worst_mass = std::max(worst_mass, std::abs(fit.r()[j] - oracle_mass[j]));
            for (const auto& y : grid.lattice(j, 5)) worst_point = std::max(worst_point, std::abs(fit.phd(y) - oracle_density(y)));
        }
    }
    return {check_le("prop1", "fitted r vs per-cell integral, max abs error", worst_mass, 1e-9 * tol_scale),
            check_le("prop1", "reconstructed PHD vs original on test lattice, max abs error", worst_point, 1e-9 * tol_scale)};
}

/// Per-cell decomposition of the PHD-KLD gain against the joint gain.
inline std::vector<CheckResult> suite_additivity(double tol_scale = 1.0, std::size_t instances = 10) {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    const CellGrid grid(Vec2::Zero(), Vec2(30.0, 30.0), 3, 3);
    SensorModel sensor = SensorModel::uniform(grid, 1.0, 0.9, 0.0);
    sensor.clutter_density = 1e-3;
    const std::vector<bool> fov(grid.num_cells(), true);
    double worst = 0.0;
    for (std::size_t it = 0; it < instances; ++it) {
        std::vector<GaussianComponent> comps;
        std::vector<Vec2> z;
        for (CellIndex j = 0; j < grid.num_cells(); ++j) {
            if (u01(rng) < 0.3) continue;
            // Prior sd 1 plus unit measurement noise: the 6-sigma measurement
            // ellipse has radius 6 sqrt(2) < 10, the margin to the cell edge.
            const Vec2 m = grid.cell_rect(j).center() + Vec2(10.0 * (u01(rng) - 0.5), 10.0 * (u01(rng) - 0.5));
            comps.push_back(detail::position_component(0.2 + 0.7 * u01(rng), m, Mat2::Identity()));
            if (u01(rng) < 0.7) z.push_back(m + std::sqrt(2.0) * Vec2(std::clamp(n01(rng), -2.0, 2.0), std::clamp(n01(rng), -2.0, 2.0)));
            if (u01(rng) < 0.3) z.push_back(grid.cell_rect(j).lo + 30.0 * Vec2(u01(rng), u01(rng)));
        }
        if (comps.empty()) comps.push_back(detail::position_component(0.5, grid.cell_rect(4).center(), Mat2::Identity()));
        const GaussianMixturePhd prior(comps);
        const auto dec = cell_decompose_gain(std::span<const Vec2>(z), grid, fov, prior, sensor, 24);
        worst = std::max(worst, dec.additivity_error());
    }
    std::vector<CheckResult> out{check_le("additivity", "contained components: relative additivity error", worst, 1e-6 * tol_scale)};

    // A component on the boundary between two cells breaks the no-overlap
    // condition; its spill fraction must bound the observed error.
    const Vec2 edge(30.0, 45.0);
    const GaussianMixturePhd straddle({detail::position_component(0.8, edge + Vec2(-1.0, 0.0), 4.0 * Mat2::Identity()),
                                       detail::position_component(0.5, grid.cell_rect(8).center(), Mat2::Identity())});
    const std::vector<Vec2> zs{edge + Vec2(1.5, 0.5), edge + Vec2(-2.0, -1.0)};
    const auto dec = cell_decompose_gain(std::span<const Vec2>(zs), grid, fov, straddle, sensor, 24);
    out.push_back(check_le("additivity", "straddling component: additivity error / violation fraction",
                           dec.additivity_error() / std::max(dec.violation, 1e-300), 1.0 * tol_scale));

    // The same ratio over random straddling instances: one component near the
    // shared edge of two cells, random widths, sensor noise and detections.
    const CellGrid pair(Vec2::Zero(), Vec2(20.0, 20.0), 2, 1);
    const std::vector<bool> both(2, true);
    double worst_ratio = 0.0;
    for (int it = 0; it < 100; ++it) {
        const SensorModel s = SensorModel::uniform(pair, 1.0 + 4.0 * u01(rng), 0.9, 1.0 + 5.0 * u01(rng));
        const double sd = 1.0 + 2.0 * u01(rng);
        const Vec2 m(20.0 + 6.0 * (u01(rng) - 0.5), 10.0 + 6.0 * (u01(rng) - 0.5));
        const GaussianMixturePhd prior({detail::position_component(0.3 + 0.6 * u01(rng), m, sd * sd * Mat2::Identity())});
        std::vector<Vec2> zr;
        if (u01(rng) < 0.8) zr.push_back(m + Vec2(4.0 * u01(rng) - 2.0, 4.0 * u01(rng) - 2.0));
        const auto d = cell_decompose_gain(std::span<const Vec2>(zr), pair, both, prior, s, 24);
        worst_ratio = std::max(worst_ratio, d.additivity_error() / std::max(d.violation, 1e-300));
    }
    out.push_back(check_le("additivity", "100 random straddling components: largest error / violation fraction",
                           worst_ratio, 1.0 * tol_scale));
    return out;
}

/// Closed-form and spatially varying null-measurement gain.
inline std::vector<CheckResult> suite_nullgain(double tol_scale = 1.0) {
    std::vector<CheckResult> out;
    out.push_back(check_le("nullgain", "d(0.9) with lambda = 1 vs 0.669741",
                           std::abs(undiscovered_null_gain(1.0, 0.9, true) - 0.669741), 1e-6 * tol_scale));
    const double exact = 0.9 + 0.1 * std::log(0.1);
    out.push_back(check_le("nullgain", "d(0.9) vs 0.9 + 0.1 ln 0.1", std::abs(undiscovered_null_gain(1.0, 0.9, true) - exact),
                           1e-9 * tol_scale));

    const Rect cell{Vec2(0.0, 0.0), Vec2(20.0, 20.0)};
    auto pd = [](const Vec2& s) { return 0.5 + 0.45 * std::sin(0.2 * s.x()) * std::cos(0.15 * s.y()); };
    const double lib = null_gain_factor(pd, cell);
    // Dense midpoint rule.
    const int n = 3000;
    const double h = 20.0 / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double p = pd(Vec2((i + 0.5) * h, (k + 0.5) * h));
            acc += p + (1.0 - p) * std::log(1.0 - p);
        }
    const double dense = acc / (static_cast<double>(n) * n);
    out.push_back(check_le("nullgain", "inhomogeneous p_D cell average vs dense midpoint quadrature", std::abs(lib - dense),
                           1e-6 * tol_scale));
    return out;
}

/// Analytic recursions for the Bernoulli miss update, a single noiseless
/// Kalman step, and conservation of the undiscovered intensity.
inline std::vector<CheckResult> suite_filters(double tol_scale = 1.0) {
    std::vector<CheckResult> out;
    const CellGrid grid(Vec2::Zero(), Vec2(20.0, 20.0), 4, 4);
    MotionModel motion;
    TrackerConfig cfg;
    cfg.min_existence = 0.0;

    auto single_track = [&](double r, const StateVec& m, const StateMat& P) {
        TrackSet ts;
        ts.tracks.push_back(Track{Label{0, 0}, r, GaussianMixturePhd({GaussianComponent{1.0, m, P, 0}})});
        return ts;
    };

    // Missed detection: r' = r (1 - p) / (1 - r p).
    {
        SensorModel sensor = SensorModel::uniform(grid, 4.0, 0.8, 0.0);
        StateVec m;
        m << 30.0, 30.0, 1.0, 0.0, 0.0;
        const StateMat P = StateMat::Identity();
        const Fov fov{1, 1, 2, 2};
        double worst = 0.0;
        for (double r : {0.1, 0.5, 0.9, 0.99}) {
            const auto upd = update_tracks(single_track(r, m, P), {}, grid, fov, sensor, motion, cfg, 1);
            const double expect = r * (1.0 - 0.8) / (1.0 - r * 0.8);
            worst = std::max(worst, upd.tracks.empty() ? 1.0 : std::abs(upd.tracks.front().existence - expect));
        }
        out.push_back(check_le("filters", "Bernoulli missed-detection existence", worst, 1e-12 * tol_scale));
    }

    // Noiseless measurement of a single certain track: Kalman gain per axis.
    {
        SensorModel sensor = SensorModel::uniform(grid, 2.0, 1.0, 0.0);
        StateVec m;
        m << 30.0, 30.0, 1.0, -1.0, 0.0;
        StateMat P = StateMat::Zero();
        P.diagonal() << 9.0, 4.0, 1.0, 1.0, 1e-4;
        P(0, 2) = P(2, 0) = 1.5;
        P(1, 3) = P(3, 1) = 0.8;
        const Vec2 z(31.0, 29.0);
        const auto upd = update_tracks(single_track(1.0, m, P), std::span<const Vec2>(&z, 1), grid, Fov{1, 1, 2, 2}, sensor,
                                       motion, cfg, 1);
        double err = 1.0;
        if (!upd.tracks.empty() && upd.tracks.front().density.size() == 1) {
            const auto& c = upd.tracks.front().density.components().front();
            // Per axis: position p with variance Ppp, velocity v with
            // covariance Ppv; k_p = Ppp / (Ppp + R), k_v = Ppv / (Ppp + R).
            const double Rv = 2.0;
            const double kx = 9.0 / (9.0 + Rv), kvx = 1.5 / (9.0 + Rv);
            const double ky = 4.0 / (4.0 + Rv), kvy = 0.8 / (4.0 + Rv);
            const double ix = z.x() - m(0), iy = z.y() - m(1);
            StateVec mo = m;
            mo(0) += kx * ix;
            mo(2) += kvx * ix;
            mo(1) += ky * iy;
            mo(3) += kvy * iy;
            err = (c.mean - mo).cwiseAbs().maxCoeff();
            err = std::max(err, std::abs(c.cov(0, 0) - (9.0 - kx * 9.0)));
            err = std::max(err, std::abs(c.cov(2, 2) - (1.0 - kvx * 1.5)));
            err = std::max(err, std::abs(c.cov(1, 1) - (4.0 - ky * 4.0)));
            err = std::max(err, std::abs(c.cov(0, 2) - (1.5 - kx * 1.5)));
            err = std::max(err, std::abs(upd.tracks.front().existence - 1.0));
        }
        out.push_back(check_le("filters", "single-track update vs scalar Kalman oracle", err, 1e-9 * tol_scale));
    }

    // Sum of lambda is conserved with p_S = 1, no births and a row-stochastic
    // transition, and by an update whose footprint holds no intensity.
    {
        std::vector<bool> roi(grid.num_cells(), false);
        for (CellIndex j = 0; j < grid.num_cells(); ++j) roi[j] = grid.row(j) >= 2;
        const CellGrid g2(Vec2::Zero(), Vec2(20.0, 20.0), 4, 4, roi, std::vector<bool>(16, true));
        UndiscoveredModel model;
        model.lambda_birth.assign(16, 0.0);
        model.p_survival = 1.0;
        model.transition = diffusion_transition(g2);
        std::vector<double> lam(16, 0.0);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u01;
        for (CellIndex j = 0; j < 16; ++j)
            if (roi[j]) lam[j] = u01(rng);
        const double before = std::accumulate(lam.begin(), lam.end(), 0.0);
        double worst = 0.0;
        for (int k = 0; k < 50; ++k) {
            lam = predict_undiscovered(lam, model);
            lam = update_undiscovered(lam, fov_mask(g2, Fov{0, 0, 4, 2}), std::vector<double>(16, 0.9));
            worst = std::max(worst, std::abs(std::accumulate(lam.begin(), lam.end(), 0.0) - before));
        }
        out.push_back(check_le("filters", "sum of lambda conservation", worst, 1e-12 * tol_scale));
    }
    return out;
}

/// GOSPA against its definition and exhaustive assignment enumeration.
inline std::vector<CheckResult> suite_gospa(double tol_scale = 1.0) {
    std::vector<CheckResult> out;
    const GospaParams params{20.0, 2.0, 2.0};
    out.push_back(check_le("gospa", "empty estimates vs one object equals 14.1421",
                           std::abs(gospa({}, {Vec2(5.0, 5.0)}, params).total - 14.1421), 1e-4 * tol_scale));

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pos(0.0, 60.0);
    std::uniform_int_distribution<int> count(0, 4);
    double worst_identity = 0.0, worst_brute = 0.0;
    for (int it = 0; it < 300; ++it) {
        std::vector<Vec2> x(count(rng)), y(count(rng));
        for (auto& v : x) v = Vec2(pos(rng), pos(rng));
        for (auto& v : y) v = Vec2(pos(rng), pos(rng));
        const auto g = gospa(x, y, params);
        const double cp = std::pow(params.c, params.p);
        worst_identity = std::max(worst_identity, std::abs(std::pow(g.total, params.p) - std::pow(g.localization, params.p) -
                                                           cp / params.alpha * double(g.n_missed + g.n_false)));

        // Exhaustive: every injection of the smaller set into the larger.
        const auto& small = x.size() <= y.size() ? x : y;
        const auto& large = x.size() <= y.size() ? y : x;
        std::vector<int> idx(large.size());
        std::iota(idx.begin(), idx.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < small.size(); ++i)
                s += std::pow(std::min((small[i] - large[static_cast<std::size_t>(idx[i])]).norm(), params.c), params.p);
            best = std::min(best, s);
        } while (std::next_permutation(idx.begin(), idx.end()));
        const double brute = std::pow(best + cp / params.alpha * double(large.size() - small.size()), 1.0 / params.p);
        worst_brute = std::max(worst_brute, std::abs(brute - g.total));
    }
    out.push_back(check_le("gospa", "decomposition identity", worst_identity, 1e-9 * tol_scale));
    out.push_back(check_le("gospa", "optimal assignment vs exhaustive enumeration", worst_brute, 1e-9 * tol_scale));
    return out;
}

/// Relative error of the histogram quadrature as R_max grows, averaged over
/// an ensemble of random discovered priors (one to three components with
/// random shapes around the middle cell of a 3 x 3 grid, random measurement
/// noise and clutter). A single instance need not be monotone: one
/// representative per region can land on either side of the region's mean
/// gain, so coarse levels sometimes cancel by luck.
struct QuadratureConvergence {
    std::vector<std::size_t> r_max;
    std::vector<double> mean_rel_error;
    std::size_t instances = 0;
    std::size_t monotone_instances = 0;
};

inline QuadratureConvergence quadrature_convergence(std::vector<std::size_t> r_values = {2, 4, 8, 16, 64},
                                                    std::size_t instances = 40, std::uint64_t seed = 1) {
    const CellGrid grid(Vec2::Zero(), Vec2(20.0, 20.0), 3, 3);
    const std::vector<bool> fov(grid.num_cells(), true);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    QuadratureConvergence out;
    out.r_max = r_values;
    out.instances = instances;
    out.mean_rel_error.assign(r_values.size(), 0.0);
    for (std::size_t it = 0; it < instances; ++it) {
        const int n = 1 + static_cast<int>(u01(rng) * 3);
        std::vector<GaussianComponent> comps;
        for (int c = 0; c < n; ++c)
            comps.push_back(detail::position_component(0.2 + 0.6 * u01(rng), Vec2(18.0 + 24.0 * u01(rng), 18.0 + 24.0 * u01(rng)),
                                                       detail::random_cov(rng, 1.0, 4.0, 0.6)));
        const SensorModel sensor = SensorModel::uniform(grid, 1.0 + 8.0 * u01(rng), 0.9, 1.0 + 29.0 * u01(rng));
        const GaussianMixturePhd prior(comps);
        QuadratureConfig qc;
        qc.lattice_n = 32;
        const double reference = discovered_conditional_gain_reference(4, grid, fov, prior, sensor, qc);
        std::vector<double> err;
        for (std::size_t k = 0; k < r_values.size(); ++k) {
            qc.r_max = r_values[k];
            err.push_back(detail::rel_err(discovered_conditional_gain(4, grid, fov, prior, sensor, qc).value, reference));
            out.mean_rel_error[k] += err.back() / static_cast<double>(instances);
        }
        out.monotone_instances += std::is_sorted(err.rbegin(), err.rend()) ? 1 : 0;
    }
    return out;
}

inline std::vector<CheckResult> suite_quadrature(double tol_scale = 1.0) {
    const auto conv = quadrature_convergence();
    double worst_increase = 0.0;
    for (std::size_t i = 1; i < conv.mean_rel_error.size(); ++i)
        worst_increase = std::max(worst_increase, conv.mean_rel_error[i] - conv.mean_rel_error[i - 1]);
    return {check_le("quadrature", "largest increase of the ensemble-mean error between successive R_max", worst_increase,
                     0.0 * tol_scale),
            check_le("quadrature", "ensemble-mean relative error at R_max = 64", conv.mean_rel_error.back(), 0.02 * tol_scale)};
}

inline std::vector<CheckResult> run_suite(std::string_view name, double tol_scale = 1.0) {
    if (name == "thm1") return suite_thm1(tol_scale);
    if (name == "prop1") return suite_prop1(tol_scale);
    if (name == "additivity") return suite_additivity(tol_scale);
    if (name == "nullgain") return suite_nullgain(tol_scale);
    if (name == "filters") return suite_filters(tol_scale);
    if (name == "gospa") return suite_gospa(tol_scale);
    if (name == "quadrature") return suite_quadrature(tol_scale);
    if (name == "all") {
        std::vector<CheckResult> all;
        for (const auto& s : suite_names()) {
            auto part = run_suite(s, tol_scale);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw std::invalid_argument("unknown verification suite '" + std::string(name) + "'");
}

inline void print(std::ostream& os, const CheckResult& c) {
    os << (c.passed ? "PASS" : "FAIL") << "  [" << c.suite << "] " << c.name << ": measured " << c.measured << " (tolerance "
       << c.tolerance << ")\n";
}

} // namespace cellmb::verify
