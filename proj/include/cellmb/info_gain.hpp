#pragma once

#include "cellmb/errors.hpp"
#include "cellmb/gaussian.hpp"
#include "cellmb/grid.hpp"
#include "cellmb/rfs.hpp"
#include "cellmb/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cellmb {

// ---- Scalar building blocks ----

/// d(p) = p + (1 - p) log(1 - p), the per-object information of a missed
/// detection with probability p; d(1) = 1 by continuity.
inline double detection_gain_factor(double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    return p + (1.0 - p) * std::log1p(-p);
}

/// 1 - L + L log L, with the L -> 0 limit equal to 1.
inline double kld_integrand(double L) {
    if (L <= 0.0) return 1.0;
    return 1.0 - L + L * std::log(L);
}

/// Null-measurement gain of the undiscovered intensity in one cell:
/// lambda * d(p_d) when the cell is in the footprint, else 0.
inline double undiscovered_null_gain(double lambda, double p_d, bool cell_in_fov) {
    if (!cell_in_fov) return 0.0;
    return lambda * detection_gain_factor(p_d);
}

/// Cell average of d(p_D(s)) for a spatially varying detection probability,
/// by composite 16-point Gauss-Legendre quadrature (panels x panels).
inline double null_gain_factor(const std::function<double(const Vec2&)>& p_d, const Rect& cell, int panels = 8) {
    using gl = boost::math::quadrature::gauss<double, 16>;
    const double hx = cell.width() / panels;
    const double hy = cell.height() / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x0 = cell.lo.x() + i * hx;
        for (int k = 0; k < panels; ++k) {
            const double y0 = cell.lo.y() + k * hy;
            total += gl::integrate(
                [&](double x) {
                    return gl::integrate([&](double y) { return detection_gain_factor(p_d(Vec2(x, y))); }, y0, y0 + hy);
                },
                x0, x0 + hx);
        }
    }
    return total / cell.area();
}

// ---- Pseudo-likelihood and the PHD-based KLD gain ----

/// Number of standard deviations beyond which the measurement likelihood is
/// treated as zero when culling lattice work.
inline constexpr double likelihood_cutoff_sigma = 9.0;

inline Rect likelihood_support(const Vec2& z, const Mat2& R) {
    return Gauss2(z, R).bounding_box(likelihood_cutoff_sigma);
}

/// PHD-update pseudo-likelihood L_Z(x; S) for a fixed measurement set and
/// footprint. The normalizer kappa + int p_D g D of each measurement is
/// computed once on construction.
template <PositionPhd Phd>
class PseudoLikelihood {
public:
    PseudoLikelihood(std::span<const Vec2> z_set, const CellGrid& grid, const std::vector<bool>& fov, const Phd& prior,
                     const SensorModel& sensor)
        : grid_(&grid), fov_(&fov), sensor_(&sensor), z_(z_set.begin(), z_set.end()) {
        denominators_.reserve(z_.size());
        likelihoods_.reserve(z_.size());
        for (const auto& z : z_) {
            const Rect support = likelihood_support(z, sensor.meas_cov);
            double den = sensor.clutter_density;
            for (CellIndex j = 0; j < grid.num_cells(); ++j) {
                if (!fov[j] || sensor.p_d(j) == 0.0) continue;
                const Rect cell = grid.cell_rect(j);
                if (!cell.overlaps(support)) continue;
                den += sensor.p_d(j) * prior.likelihood_mass(z, sensor.meas_cov, cell);
            }
            if (!(den > 0.0))
                throw DegenerateModelError("zero pseudo-likelihood normalizer: no clutter and no predicted detection mass");
            denominators_.push_back(den);
            likelihoods_.emplace_back(z, sensor.meas_cov);
        }
    }

    [[nodiscard]] const std::vector<double>& denominators() const { return denominators_; }

    /// L_Z at position s given the detection probability there.
    [[nodiscard]] double at(const Vec2& s, double p_d) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) sum += likelihoods_[i].pdf(s) / denominators_[i];
        return 1.0 - p_d + p_d * sum;
    }

    [[nodiscard]] double operator()(const Vec2& s) const { return at(s, sensor_->p_d_at(*grid_, *fov_, s)); }

private:
    const CellGrid* grid_;
    const std::vector<bool>* fov_;
    const SensorModel* sensor_;
    std::vector<Vec2> z_;
    std::vector<double> denominators_;
    std::vector<Gauss2> likelihoods_;
};

/// L_Z(x; S) evaluated at one position.
template <PositionPhd Phd>
double pseudo_likelihood(std::span<const Vec2> z_set, const Vec2& x, const CellGrid& grid, const std::vector<bool>& fov,
                         const Phd& prior, const SensorModel& sensor) {
    return PseudoLikelihood<Phd>(z_set, grid, fov, prior, sensor)(x);
}

template <PositionPhd Phd>
std::vector<double> density_on(const Phd& phd, const std::vector<Vec2>& pts, const Rect&) {
    std::vector<double> out(pts.size());
    for (std::size_t l = 0; l < pts.size(); ++l) out[l] = phd.density(pts[l]);
    return out;
}

inline std::vector<double> density_on(const GaussianMixturePhd& phd, const std::vector<Vec2>& pts, const Rect& region) {
    return phd.density_at(pts, region);
}

/// PHD-based KLD information gain R(Z; S, D) with the prior sampled once on a
/// per-cell midpoint lattice, so repeated evaluations for different
/// measurement sets stay cheap.
///
/// The integrand is split as D h(1 - p) + D [h(L) - h(1 - p)]: the first part is
/// integrated exactly from the cell masses, the second (nonzero only near
/// measurements) on the lattice.
template <PositionPhd Phd>
class KldGainEvaluator {
public:
    KldGainEvaluator(const Phd& prior, const CellGrid& grid, std::vector<bool> fov, const SensorModel& sensor,
                     std::size_t lattice_n = 32)
        : prior_(&prior), grid_(&grid), fov_(std::move(fov)), sensor_(&sensor), lattice_n_(lattice_n) {
        if (fov_.size() != grid.num_cells()) throw std::invalid_argument("footprint mask length must equal cell count");
        dA_ = grid.cell_area() / static_cast<double>(lattice_n * lattice_n);
        for (CellIndex j = 0; j < grid.num_cells(); ++j) {
            if (!fov_[j]) continue;
            CellData c;
            c.index = j;
            c.rect = grid.cell_rect(j);
            c.p_d = sensor.p_d(j);
            c.mass = prior.mass_in(c.rect);
            null_gain_ += detection_gain_factor(c.p_d) * c.mass;
            cells_.push_back(std::move(c));
        }
    }

    /// Gain of the empty measurement set.
    [[nodiscard]] double null_gain() const { return null_gain_; }

    [[nodiscard]] double operator()(std::span<const Vec2> z_set) const {
        if (z_set.empty()) return null_gain_;
        const PseudoLikelihood<Phd> L(z_set, *grid_, fov_, *prior_, *sensor_);
        double gain = null_gain_;
        for (const auto& c : cells_) {
            if (c.p_d == 0.0 || c.mass == 0.0) continue;
            bool near = false;
            for (const auto& z : z_set) near = near || likelihood_support(z, sensor_->meas_cov).overlaps(c.rect);
            if (!near) continue;
            const auto& [pts, dens] = lattice(c);
            const double base = kld_integrand(1.0 - c.p_d);
            double corr = 0.0;
            for (std::size_t l = 0; l < pts.size(); ++l) {
                if (dens[l] == 0.0) continue;
                corr += dens[l] * (kld_integrand(L.at(pts[l], c.p_d)) - base);
            }
            gain += corr * dA_;
        }
        return std::max(0.0, gain);
    }

private:
    struct CellData {
        CellIndex index = 0;
        Rect rect;
        double p_d = 0.0;
        double mass = 0.0;
        mutable std::vector<Vec2> pts;
        mutable std::vector<double> dens;
        mutable bool sampled = false;
    };

    // Lattice samples are created on first use; the evaluator is not shared
    // across threads.
    std::pair<const std::vector<Vec2>&, const std::vector<double>&> lattice(const CellData& c) const {
        if (!c.sampled) {
            c.pts = grid_->lattice(c.index, lattice_n_);
            c.dens = density_on(*prior_, c.pts, c.rect);
            c.sampled = true;
        }
        return {c.pts, c.dens};
    }

    const Phd* prior_;
    const CellGrid* grid_;
    std::vector<bool> fov_;
    const SensorModel* sensor_;
    std::size_t lattice_n_;
    double dA_ = 0.0;
    double null_gain_ = 0.0;
    std::vector<CellData> cells_;
};

/// R(Z; S, D) = int D(x) {1 - L_Z(x; S) + L_Z log L_Z} dx.
template <PositionPhd Phd>
double phd_kld_gain(std::span<const Vec2> z_set, const CellGrid& grid, const std::vector<bool>& fov, const Phd& prior,
                    const SensorModel& sensor, std::size_t lattice_n = 32) {
    return KldGainEvaluator<Phd>(prior, grid, fov, sensor, lattice_n)(z_set);
}

// ---- Cell additivity ----

/// Fraction of each mixture component's predicted-measurement mass that falls
/// outside the cell holding its mean (1 when the mean is off-grid).
inline std::vector<double> measurement_spill_fractions(const GaussianMixturePhd& prior, const CellGrid& grid,
                                                       const SensorModel& sensor) {
    std::vector<double> out;
    out.reserve(prior.size());
    for (const auto& g : prior.position_marginals()) {
        const auto home = grid.try_cell_of(g.mean());
        if (!home) {
            out.push_back(1.0);
            continue;
        }
        const Gauss2 meas(g.mean(), g.cov() + sensor.meas_cov);
        out.push_back(std::clamp(1.0 - rect_mass(meas, grid.cell_rect(*home)), 0.0, 1.0));
    }
    return out;
}

struct CellGainDecomposition {
    std::vector<double> per_cell;
    double cell_sum = 0.0;
    double joint = 0.0;
    /// Weight-averaged spill fraction of the prior components homed in each cell.
    std::vector<double> cell_violation;
    /// Largest spill fraction among components homed in footprint cells.
    double violation = 0.0;

    [[nodiscard]] double additivity_error() const {
        return std::abs(cell_sum - joint) / std::max(std::abs(joint), std::numeric_limits<double>::min());
    }
};

namespace detail {

inline void fill_violation(CellGainDecomposition& out, const GaussianMixturePhd& prior, const CellGrid& grid,
                           const std::vector<bool>& fov, const SensorModel& sensor) {
    const auto spill = measurement_spill_fractions(prior, grid, sensor);
    std::vector<double> wsum(grid.num_cells(), 0.0);
    out.cell_violation.assign(grid.num_cells(), 0.0);
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const auto home = grid.try_cell_of(prior.position_marginals()[i].mean());
        if (!home) continue;
        const double w = prior.components()[i].weight;
        out.cell_violation[*home] += w * spill[i];
        wsum[*home] += w;
        if (fov[*home] && w > 0.0) out.violation = std::max(out.violation, spill[i]);
    }
    for (CellIndex j = 0; j < grid.num_cells(); ++j)
        if (wsum[j] > 0.0) out.cell_violation[j] /= wsum[j];
}

inline void fill_violation(CellGainDecomposition& out, const PiecewisePhd& prior, const CellGrid& grid,
                           const std::vector<bool>& fov, const SensorModel& sensor) {
    out.cell_violation.assign(grid.num_cells(), 0.0);
    for (CellIndex j = 0; j < grid.num_cells(); ++j) {
        if (prior.lambda(j) == 0.0) continue;
        const Rect cell = grid.cell_rect(j);
        const auto pts = grid.lattice(j, 16);
        double spill = 0.0;
        for (const auto& s : pts) spill += 1.0 - rect_mass(Gauss2(s, sensor.meas_cov), cell);
        out.cell_violation[j] = spill / pts.size();
        if (fov[j]) out.violation = std::max(out.violation, out.cell_violation[j]);
    }
}

} // namespace detail

/// Per-cell gains R(Z n Z_j; S_j) for every footprint cell, the joint gain
/// R(Z; S), and the spill diagnostics that measure how far the prior is from
/// the no-cell-overlap condition.
template <PositionPhd Phd>
CellGainDecomposition cell_decompose_gain(std::span<const Vec2> z_set, const CellGrid& grid,
                                          const std::vector<bool>& fov, const Phd& prior, const SensorModel& sensor,
                                          std::size_t lattice_n = 32) {
    CellGainDecomposition out;
    out.per_cell.assign(grid.num_cells(), 0.0);
    for (CellIndex j = 0; j < grid.num_cells(); ++j) {
        if (!fov[j]) continue;
        std::vector<bool> single(grid.num_cells(), false);
        single[j] = true;
        std::vector<Vec2> zj;
        for (const auto& z : z_set)
            if (grid.cell_rect(j).contains(z)) zj.push_back(z);
        out.per_cell[j] = phd_kld_gain(std::span<const Vec2>(zj), grid, single, prior, sensor, lattice_n);
        out.cell_sum += out.per_cell[j];
    }
    out.joint = phd_kld_gain(z_set, grid, fov, prior, sensor, lattice_n);
    detail::fill_violation(out, prior, grid, fov, sensor);
    return out;
}

// ---- Expectation under a cell-MB measurement density ----

/// Closed-form expected gain for a cell-additive gain under a cell-MB
/// measurement density: sum_j R(0; S_j)(1 - r_j) + Rhat_j r_j.
inline double expected_gain_cellmb(std::span<const double> r, std::span<const double> null_gains,
                                   std::span<const double> conditional_gains) {
    if (null_gains.size() != r.size() || conditional_gains.size() != r.size())
        throw std::invalid_argument("gain vectors must have one entry per cell");
    double e = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) e += null_gains[j] * (1.0 - r[j]) + conditional_gains[j] * r[j];
    return e;
}

inline double expected_gain_cellmb(const CellMb& cellmb, std::span<const double> null_gains,
                                   std::span<const double> conditional_gains) {
    return expected_gain_cellmb(std::span<const double>(cellmb.r()), null_gains, conditional_gains);
}

using SetFunction = std::function<double(std::span<const Vec2>)>;

/// Discretized spatial density of one cell: lattice points and their
/// probability weights p^j(z) dA, renormalized to sum to one.
struct CellLatticeDensity {
    std::vector<Vec2> points;
    std::vector<double> weights;
};

inline CellLatticeDensity cell_lattice_density(const CellMb& cellmb, CellIndex j, std::size_t lattice_n) {
    CellLatticeDensity out;
    if (cellmb.is_empty(j)) return out;
    const auto pts = cellmb.grid().lattice(j, lattice_n);
    double total = 0.0;
    for (const auto& p : pts) {
        const double w = cellmb.spatial_density(j, p);
        if (w > 0.0) {
            out.points.push_back(p);
            out.weights.push_back(w);
            total += w;
        }
    }
    if (total > 0.0)
        for (auto& w : out.weights) w /= total;
    return out;
}

/// Expectation of an arbitrary set function under a cell-MB density by direct
/// enumeration: every occupancy pattern of the P cells, and for the occupied
/// cells every combination of lattice points. Exponential cost; P <= 6.
inline double brute_force_expected_gain(const CellMb& cellmb, const SetFunction& gain_fn, std::size_t lattice_n = 8) {
    const std::size_t P = cellmb.num_cells();
    if (P > 6) throw PreconditionError("brute-force expectation limited to at most 6 cells");
    std::vector<CellLatticeDensity> lat(P);
    for (CellIndex j = 0; j < P; ++j) lat[j] = cell_lattice_density(cellmb, j, lattice_n);

    double expectation = 0.0;
    std::vector<Vec2> z;
    for (std::size_t pattern = 0; pattern < (std::size_t{1} << P); ++pattern) {
        double pw = 1.0;
        std::vector<CellIndex> occupied;
        for (CellIndex j = 0; j < P; ++j) {
            const bool occ = (pattern >> j) & 1U;
            pw *= occ ? cellmb.r()[j] : 1.0 - cellmb.r()[j];
            if (occ) occupied.push_back(j);
        }
        if (pw == 0.0) continue;
        bool feasible = true;
        for (auto j : occupied) feasible = feasible && !lat[j].points.empty();
        if (!feasible) continue;

        double inner = 0.0;
        z.assign(occupied.size(), Vec2::Zero());
        std::function<void(std::size_t, double)> recurse = [&](std::size_t depth, double w) {
            if (depth == occupied.size()) {
                inner += w * gain_fn(std::span<const Vec2>(z));
                return;
            }
            const auto& cell = lat[occupied[depth]];
            for (std::size_t l = 0; l < cell.points.size(); ++l) {
                z[depth] = cell.points[l];
                recurse(depth + 1, w * cell.weights[l]);
            }
        };
        recurse(0, 1.0);
        expectation += pw * inner;
    }
    return expectation;
}

// ---- Histogram quadrature of the single-measurement conditional gain ----

/// Q = lattice_n^2 uniformly spaced samples per cell, at most r_max regions, and
/// a floor eps_min on the log intensity (default log(1e-3 * clutter density)).
struct QuadratureConfig {
    std::size_t lattice_n = 32;
    std::size_t r_max = 8;
    std::optional<double> eps_min;

    [[nodiscard]] std::size_t samples() const { return lattice_n * lattice_n; }

    [[nodiscard]] double log_floor(double clutter_density) const {
        if (eps_min) return *eps_min;
        if (clutter_density > 0.0) return std::log(clutter_density * 1e-3);
        return -std::numeric_limits<double>::infinity();
    }
};

struct QuadratureRegion {
    Vec2 representative = Vec2::Zero();
    double representative_density = 0.0;
    double mean_density = 0.0;
    double volume = 0.0;
    std::size_t count = 0;
};

struct QuadratureResult {
    double value = 0.0;
    std::vector<QuadratureRegion> regions;
};

/// Approximates int_cell R({z}) p(z) dz, p = D / cell_mass, by grouping the
/// lattice samples into regions of similar log-intensity and evaluating the
/// gain once per region at the sample whose intensity is closest to the
/// region mean.
///
/// Samples with log D below the floor are discarded. When r_max is at least
/// the number of retained samples each sample forms its own region, which is
/// the plain lattice Riemann sum.
inline QuadratureResult histogram_quadrature(const CellGrid& grid, CellIndex j, const std::vector<Vec2>& pts,
                                             const std::vector<double>& dens, double cell_mass,
                                             const QuadratureConfig& cfg, double log_floor,
                                             const std::function<double(const Vec2&)>& gain) {
    QuadratureResult out;
    const std::size_t n = cfg.lattice_n;
    const std::size_t Q = pts.size();
    if (!(cell_mass > 0.0) || Q == 0) return out;
    const double cell_area = grid.cell_area();
    const Vec2 center = grid.cell_rect(j).center();

    std::vector<double> logd(Q, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> kept;
    for (std::size_t l = 0; l < Q; ++l) {
        if (dens[l] > 0.0) logd[l] = std::log(dens[l]);
        if (dens[l] > 0.0 && logd[l] >= log_floor) kept.push_back(l);
    }
    if (kept.empty()) return out;

    std::vector<std::vector<std::size_t>> members;
    if (cfg.r_max >= kept.size()) {
        for (auto l : kept) members.push_back({l});
    } else {
        const std::size_t R = std::max<std::size_t>(cfg.r_max, 1);
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < Q; ++l) hi = std::max(hi, logd[l]);
        double interior_min = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < Q; ++l) {
            const std::size_t ix = l % n;
            const std::size_t iy = l / n;
            const bool interior = n < 3 || (ix > 0 && ix + 1 < n && iy > 0 && iy + 1 < n);
            if (interior) interior_min = std::min(interior_min, logd[l]);
        }
        const double lo = std::max(log_floor, interior_min);
        std::vector<double> edges(R + 1);
        for (std::size_t i = 0; i < R; ++i) edges[i] = lo + static_cast<double>(i) / R * (hi - lo);
        edges[R] = hi;
        members.assign(R, {});
        for (auto l : kept) {
            std::size_t bin = 0;
            while (bin + 1 < R && logd[l] > edges[bin + 1]) ++bin;
            members[bin].push_back(l);
        }
    }

    for (const auto& m : members) {
        if (m.empty()) continue;
        QuadratureRegion reg;
        reg.count = m.size();
        double sum = 0.0;
        for (auto l : m) sum += dens[l];
        reg.mean_density = sum / m.size();
        std::size_t best = m.front();
        double best_dev = std::numeric_limits<double>::infinity();
        double best_dist = std::numeric_limits<double>::infinity();
        for (auto l : m) {
            const double dev = std::abs(dens[l] - reg.mean_density);
            const double dist = (pts[l] - center).squaredNorm();
            if (dev < best_dev || (dev == best_dev && dist < best_dist)) {
                best = l;
                best_dev = dev;
                best_dist = dist;
            }
        }
        reg.representative = pts[best];
        reg.representative_density = dens[best];
        reg.volume = static_cast<double>(m.size()) / Q * cell_area;
        out.value += gain(reg.representative) * (reg.representative_density / cell_mass) * reg.volume;
        out.regions.push_back(reg);
    }
    return out;
}

// ---- Predicted measurement intensities ----

/// D_v(z; S) ~ sum_i w_i p_D(m_i; S) N(z; H m_i, H P_i H' + R) + kappa_c, with the
/// detection probability frozen at each component mean.
inline GaussianMixturePhd predicted_measurement_phd(const GaussianMixturePhd& prior, const CellGrid& grid,
                                                    const std::vector<bool>& fov, const SensorModel& sensor) {
    std::vector<GaussianComponent> comps;
    comps.reserve(prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const auto& g = prior.position_marginals()[i];
        const double p = sensor.p_d_at(grid, fov, g.mean());
        if (p == 0.0 || prior.components()[i].weight == 0.0) continue;
        GaussianComponent c;
        c.weight = prior.components()[i].weight * p;
        c.mean = g.mean();
        c.cov = g.cov() + sensor.meas_cov;
        comps.push_back(std::move(c));
    }
    return GaussianMixturePhd(std::move(comps), sensor.clutter_density);
}

/// Rhat_v^j: expected single-measurement gain for discovered objects in cell j,
/// given the predicted measurement intensity over the footprint.
inline QuadratureResult discovered_conditional_gain(CellIndex j, const CellGrid& grid, const std::vector<bool>& fov,
                                                    const GaussianMixturePhd& prior, const GaussianMixturePhd& meas_phd,
                                                    const SensorModel& sensor, const QuadratureConfig& quad) {
    const Rect cell = grid.cell_rect(j);
    const double r_v = meas_phd.mass_in(cell);
    if (!fov[j] || !(r_v > 0.0)) return {};
    std::vector<bool> single(grid.num_cells(), false);
    single[j] = true;
    const KldGainEvaluator<GaussianMixturePhd> gain(prior, grid, single, sensor, quad.lattice_n);
    const auto pts = grid.lattice(j, quad.lattice_n);
    const auto dens = meas_phd.density_at(pts, cell);
    return histogram_quadrature(grid, j, pts, dens, r_v, quad, quad.log_floor(sensor.clutter_density),
                                [&](const Vec2& z) { return gain(std::span<const Vec2>(&z, 1)); });
}

inline QuadratureResult discovered_conditional_gain(CellIndex j, const CellGrid& grid, const std::vector<bool>& fov,
                                                    const GaussianMixturePhd& prior, const SensorModel& sensor,
                                                    const QuadratureConfig& quad) {
    return discovered_conditional_gain(j, grid, fov, prior, predicted_measurement_phd(prior, grid, fov, sensor), sensor,
                                       quad);
}

/// Full-lattice Riemann sum of the same conditional gain over the samples above
/// the log-intensity floor; the reference the histogram quadrature converges to.
inline double discovered_conditional_gain_reference(CellIndex j, const CellGrid& grid, const std::vector<bool>& fov,
                                                    const GaussianMixturePhd& prior, const SensorModel& sensor,
                                                    const QuadratureConfig& quad) {
    QuadratureConfig full = quad;
    full.r_max = quad.samples();
    return discovered_conditional_gain(j, grid, fov, prior, sensor, full).value;
}

// ---- Undiscovered-object conditional gain table ----

/// Rbar_w(lambda): conditional single-measurement gain of one cell holding a
/// uniform undiscovered intensity of total lambda, tabulated on equally spaced
/// knots over [0, 1] and linearly interpolated. Also carries the detection-mass
/// coefficient so r_w(lambda) = kappa A + lambda * detect_coeff.
class UndiscoveredGainTable {
public:
    UndiscoveredGainTable(const Vec2& cell_size, double p_d, const Mat2& meas_cov, double clutter_density,
                          const QuadratureConfig& quad, std::size_t knots = 21)
        : p_d_(p_d) {
        if (knots < 2) throw std::invalid_argument("interpolation table needs at least two knots");
        const CellGrid cell(Vec2::Zero(), cell_size, 1, 1);
        SensorModel sensor;
        sensor.meas_cov = meas_cov;
        sensor.p_detect = {p_d};
        sensor.clutter_density = clutter_density;
        const std::vector<bool> fov{true};
        const Rect rect = cell.cell_rect(0);
        const auto pts = cell.lattice(0, quad.lattice_n);

        // Probability that a detection of a uniformly placed object lands in its cell.
        std::vector<double> stay(pts.size());
        double stay_avg = 0.0;
        for (std::size_t l = 0; l < pts.size(); ++l) {
            stay[l] = rect_mass(Gauss2(pts[l], meas_cov), rect);
            stay_avg += stay[l];
        }
        detect_coeff_ = p_d * stay_avg / pts.size();
        clutter_mass_ = clutter_density * rect.area();

        knots_.resize(knots);
        values_.resize(knots);
        for (std::size_t k = 0; k < knots; ++k) {
            const double lambda = static_cast<double>(k) / (knots - 1);
            knots_[k] = lambda;
            const PiecewisePhd prior(cell, {lambda});
            std::vector<double> dens(pts.size());
            for (std::size_t l = 0; l < pts.size(); ++l)
                dens[l] = clutter_density + lambda * p_d / rect.area() * stay[l];
            const double r_w = clutter_mass_ + lambda * detect_coeff_;
            if (!(r_w > 0.0)) {
                values_[k] = 0.0;
                continue;
            }
            const KldGainEvaluator<PiecewisePhd> gain(prior, cell, fov, sensor, quad.lattice_n);
            values_[k] = histogram_quadrature(cell, 0, pts, dens, r_w, quad, quad.log_floor(clutter_density),
                                              [&](const Vec2& z) { return gain(std::span<const Vec2>(&z, 1)); })
                             .value;
        }
    }

    [[nodiscard]] double p_d() const { return p_d_; }
    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    /// Interpolated conditional gain; lambda is clamped to [0, 1].
    [[nodiscard]] double operator()(double lambda) const {
        const double x = std::clamp(lambda, 0.0, 1.0);
        const double pos = x * (knots_.size() - 1);
        const auto k = std::min(static_cast<std::size_t>(pos), knots_.size() - 2);
        const double t = pos - static_cast<double>(k);
        return values_[k] + t * (values_[k + 1] - values_[k]);
    }

    /// Cell mass of the undiscovered predicted-measurement intensity.
    [[nodiscard]] double detection_mass(double lambda) const { return clutter_mass_ + lambda * detect_coeff_; }

private:
    double p_d_ = 0.0;
    double detect_coeff_ = 0.0;
    double clutter_mass_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> values_;
};

/// One interpolation table per distinct detection probability among FoR cells.
class UndiscoveredGainModel {
public:
    UndiscoveredGainModel(const CellGrid& grid, const SensorModel& sensor, const QuadratureConfig& quad,
                          std::size_t knots = 21) {
        for (CellIndex j = 0; j < grid.num_cells(); ++j) {
            if (!grid.in_for(j)) continue;
            const double p = sensor.p_d(j);
            if (!tables_.contains(p))
                tables_.emplace(p, UndiscoveredGainTable(grid.cell_size(), p, sensor.meas_cov, sensor.clutter_density,
                                                         quad, knots));
        }
    }

    [[nodiscard]] const UndiscoveredGainTable& table(double p_d) const {
        const auto it = tables_.find(p_d);
        if (it == tables_.end()) throw std::out_of_range("no undiscovered gain table for this detection probability");
        return it->second;
    }

private:
    std::map<double, UndiscoveredGainTable> tables_;
};

// ---- Field-of-regard gain arrays ----

/// Per-cell expected discovered and undiscovered gains over the FoR, together
/// with the cell-MB existence probabilities they were assembled from.
struct GainArrays {
    std::vector<double> discovered;
    std::vector<double> undiscovered;
    std::vector<double> r_v;
    std::vector<double> r_w;
    /// Spill fraction of the discovered prior per cell (no-overlap diagnostic).
    std::vector<double> violation;

    [[nodiscard]] std::vector<double> total() const {
        std::vector<double> t(discovered.size());
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = discovered[j] + undiscovered[j];
        return t;
    }
};

/// Expected gain of every FoR cell for the discovered prior D_d and the
/// undiscovered prior lambda, assembled cell by cell as
///   R^d[j] = R^d(0; T_j)(1 - r_v) + Rhat_v r_v,
///   R^u[j] = R^u(0; T_j)(1 - r_w) + Rhat_w r_w.
/// Existence probabilities above one (more than one expected detection in a
/// cell) are clamped to one.
/// Cells whose discovered intensity integrates below this get zero
/// discovered gain without running the quadrature.
inline constexpr double negligible_mass = 1e-12;

inline GainArrays for_gain_arrays(const CellGrid& grid, const GaussianMixturePhd& discovered_prior,
                                  const PiecewisePhd& undiscovered_prior, const SensorModel& sensor,
                                  const QuadratureConfig& quad, const UndiscoveredGainModel& undiscovered_model) {
    const std::size_t P = grid.num_cells();
    GainArrays g;
    g.discovered.assign(P, 0.0);
    g.undiscovered.assign(P, 0.0);
    g.r_v.assign(P, 0.0);
    g.r_w.assign(P, 0.0);
    const std::vector<bool>& regard = grid.for_mask();
    const GaussianMixturePhd meas_phd = predicted_measurement_phd(discovered_prior, grid, regard, sensor);

    CellGainDecomposition diag;
    detail::fill_violation(diag, discovered_prior, grid, regard, sensor);
    g.violation = diag.cell_violation;

    std::vector<CellIndex> cells;
    for (CellIndex j = 0; j < P; ++j)
        if (regard[j]) cells.push_back(j);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(cells.size()); ++idx) {
        const CellIndex j = cells[static_cast<std::size_t>(idx)];
        const Rect rect = grid.cell_rect(j);
        const double p = sensor.p_d(j);

        const double r_v = std::clamp(meas_phd.mass_in(rect), 0.0, 1.0);
        const double mass_d = discovered_prior.mass_in(rect);
        const double null_d = detection_gain_factor(p) * mass_d;
        // Both gain terms integrate the discovered intensity over this cell
        // only, so they vanish with its mass.
        const double cond_d = r_v > 0.0 && mass_d > negligible_mass
                                  ? discovered_conditional_gain(j, grid, regard, discovered_prior, meas_phd, sensor, quad).value
                                  : 0.0;
        g.r_v[j] = r_v;
        g.discovered[j] = null_d * (1.0 - r_v) + cond_d * r_v;

        const auto& table = undiscovered_model.table(p);
        const double lambda = undiscovered_prior.lambda(j);
        const double r_w = std::clamp(table.detection_mass(lambda), 0.0, 1.0);
        const double null_u = undiscovered_null_gain(lambda, p, true);
        g.r_w[j] = r_w;
        g.undiscovered[j] = null_u * (1.0 - r_w) + table(lambda) * r_w;
    }
    return g;
}

} // namespace cellmb
