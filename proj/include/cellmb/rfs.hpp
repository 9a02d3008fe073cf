#pragma once

#include "cellmb/errors.hpp"
#include "cellmb/gaussian.hpp"
#include "cellmb/grid.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <functional>
#include <memory>
#include <sstream>
#include <utility>
#include <vector>

namespace cellmb {

/// Weighted Gaussian term of a mixture. The first two coordinates of the mean
/// are position (pixels); further coordinates are velocity and turn rate.
struct GaussianComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    /// Number of boundary splits this component went through since the last
    /// prediction; bounds the recursion of split_for_fov across calls.
    int split_depth = 0;
};

/// Gaussian-mixture intensity, optionally lifted by a uniform background level
/// (used for the clutter floor of predicted-measurement intensities).
class GaussianMixturePhd {
public:
    /// Components whose cull_sigma box misses a region are skipped when
    /// integrating over it.
    static constexpr double cull_sigma = 9.0;

    GaussianMixturePhd() = default;

    explicit GaussianMixturePhd(std::vector<GaussianComponent> components, double background = 0.0)
        : components_(std::move(components)), background_(background) {
        if (background_ < 0.0) throw std::invalid_argument("background intensity must be nonnegative");
        marginals_.reserve(components_.size());
        for (const auto& c : components_) {
            if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
                throw std::invalid_argument("mixture weights must be finite and nonnegative");
            if (c.mean.size() < 2 || c.cov.rows() != c.mean.size() || c.cov.cols() != c.mean.size())
                throw std::invalid_argument("component mean/covariance dimensions disagree");
            if (!c.cov.isApprox(c.cov.transpose(), 1e-9) || c.cov.llt().info() != Eigen::Success)
                throw std::invalid_argument("component covariance must be symmetric positive-definite");
            marginals_.emplace_back(c.mean.head<2>(), c.cov.topLeftCorner<2, 2>());
        }
    }

    [[nodiscard]] const std::vector<GaussianComponent>& components() const { return components_; }
    [[nodiscard]] const std::vector<Gauss2>& position_marginals() const { return marginals_; }
    [[nodiscard]] double background() const { return background_; }
    [[nodiscard]] std::size_t size() const { return components_.size(); }
    [[nodiscard]] bool empty() const { return components_.empty(); }

    [[nodiscard]] double total_weight() const {
        double s = 0.0;
        for (const auto& c : components_) s += c.weight;
        return s;
    }

    /// Position-marginal intensity at s.
    [[nodiscard]] double density(const Vec2& s) const {
        double d = background_;
        for (std::size_t i = 0; i < components_.size(); ++i) d += components_[i].weight * marginals_[i].pdf(s);
        return d;
    }

    /// Intensity at each point, skipping components whose n-sigma box misses region.
    [[nodiscard]] std::vector<double> density_at(const std::vector<Vec2>& pts, const Rect& region,
                                                 double n_sigma = 9.0) const {
        std::vector<double> out(pts.size(), background_);
        for (auto i : components_near(region, n_sigma)) {
            const double w = components_[i].weight;
            for (std::size_t l = 0; l < pts.size(); ++l) out[l] += w * marginals_[i].pdf(pts[l]);
        }
        return out;
    }

    [[nodiscard]] std::vector<std::size_t> components_near(const Rect& region, double n_sigma) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < components_.size(); ++i)
            if (components_[i].weight > 0.0 && marginals_[i].bounding_box(n_sigma).overlaps(region)) idx.push_back(i);
        return idx;
    }

    /// Integral of the intensity over r.
    [[nodiscard]] double mass_in(const Rect& r) const {
        double m = background_ * r.area();
        for (std::size_t i = 0; i < components_.size(); ++i) {
            // Beyond 9 sigma a component contributes below 1e-18 of its weight.
            const Rect box = marginals_[i].bounding_box(cull_sigma);
            if (components_[i].weight == 0.0 || !box.overlaps(r)) continue;
            m += components_[i].weight * rect_mass(marginals_[i], r);
        }
        return m;
    }

    /// Integral over r of N(z; s, meas_cov) D(s) ds.
    [[nodiscard]] double likelihood_mass(const Vec2& z, const Mat2& meas_cov, const Rect& r) const {
        double m = background_ > 0.0 ? background_ * rect_mass(Gauss2(z, meas_cov), r) : 0.0;
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (components_[i].weight == 0.0 || !marginals_[i].bounding_box(cull_sigma).overlaps(r)) continue;
            m += components_[i].weight * likelihood_rect_mass(z, meas_cov, marginals_[i], r);
        }
        return m;
    }

private:
    std::vector<GaussianComponent> components_;
    std::vector<Gauss2> marginals_;
    double background_ = 0.0;
};

/// Piecewise-homogeneous intensity: lambda_j expected objects spread uniformly
/// over cell j. Cells outside the ROI carry no mass.
class PiecewisePhd {
public:
    PiecewisePhd() = default;

    PiecewisePhd(CellGrid grid, std::vector<double> lambdas) : grid_(std::move(grid)), lambdas_(std::move(lambdas)) {
        if (lambdas_.size() != grid_.num_cells()) throw std::invalid_argument("lambda vector length must equal cell count");
        for (std::size_t j = 0; j < lambdas_.size(); ++j) {
            if (!(lambdas_[j] >= 0.0) || !std::isfinite(lambdas_[j]))
                throw std::invalid_argument("cell intensities must be finite and nonnegative");
            if (!grid_.in_roi(j) && lambdas_[j] != 0.0)
                throw std::invalid_argument("cell " + std::to_string(j) + " is outside the ROI but has nonzero intensity");
        }
    }

    [[nodiscard]] const CellGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& lambdas() const { return lambdas_; }
    [[nodiscard]] double lambda(CellIndex j) const { return lambdas_.at(j); }

    [[nodiscard]] double density(const Vec2& s) const {
        const auto j = grid_.try_cell_of(s);
        return j ? lambdas_[*j] / grid_.cell_area() : 0.0;
    }

    [[nodiscard]] double mass_in(const Rect& r) const {
        double m = 0.0;
        for (CellIndex j = 0; j < lambdas_.size(); ++j) {
            if (lambdas_[j] == 0.0) continue;
            const Rect o = grid_.cell_rect(j).intersect(r);
            if (!o.empty()) m += lambdas_[j] * o.area() / grid_.cell_area();
        }
        return m;
    }

    [[nodiscard]] double likelihood_mass(const Vec2& z, const Mat2& meas_cov, const Rect& r) const {
        const Gauss2 g(z, meas_cov);
        double m = 0.0;
        for (CellIndex j = 0; j < lambdas_.size(); ++j) {
            if (lambdas_[j] == 0.0) continue;
            const Rect o = grid_.cell_rect(j).intersect(r);
            if (!o.empty()) m += lambdas_[j] / grid_.cell_area() * rect_mass(g, o);
        }
        return m;
    }

    [[nodiscard]] double total() const {
        double s = 0.0;
        for (double l : lambdas_) s += l;
        return s;
    }

private:
    CellGrid grid_;
    std::vector<double> lambdas_;
};

/// Interface shared by the intensity representations: pointwise position
/// density, mass over rectangles, and the measurement-likelihood mass.
template <class T>
concept PositionPhd = requires(const T& d, const Vec2& s, const Mat2& R, const Rect& r) {
    { d.density(s) } -> std::convertible_to<double>;
    { d.mass_in(r) } -> std::convertible_to<double>;
    { d.likelihood_mass(s, R, r) } -> std::convertible_to<double>;
};

/// Expected number of objects in cell j.
template <PositionPhd Phd>
double phd_mass(const Phd& phd, const CellGrid& grid, CellIndex j) {
    grid.check_index(j);
    return phd.mass_in(grid.cell_rect(j));
}

/// Expected number of objects over the whole grid.
template <PositionPhd Phd>
double phd_mass(const Phd& phd, const CellGrid& grid) {
    double m = 0.0;
    for (CellIndex j = 0; j < grid.num_cells(); ++j) m += phd.mass_in(grid.cell_rect(j));
    return m;
}

/// Total mass of a mixture over the whole space (background excluded).
inline double phd_mass(const GaussianMixturePhd& phd) { return phd.total_weight(); }

inline double phd_mass(const PiecewisePhd& phd) { return phd.total(); }

/// Poisson RFS: fully described by its intensity; the mean cardinality is the
/// intensity mass over the grid domain.
template <PositionPhd Phd>
struct PoissonRfs {
    Phd phd;
    double mean_cardinality = 0.0;

    PoissonRfs(Phd d, const CellGrid& grid) : phd(std::move(d)), mean_cardinality(phd_mass(phd, grid)) {}
};

/// Cell multi-Bernoulli density: at most one point per cell, cell j occupied
/// with probability r[j] and, if occupied, distributed as the normalized
/// restriction of the source intensity to the cell.
class CellMb {
public:
    static constexpr double empty_threshold = 1e-12;

    using DensityFn = std::function<double(const Vec2&)>;

    CellMb(CellGrid grid, std::vector<double> r, DensityFn source)
        : grid_(std::move(grid)), r_(std::move(r)), source_(std::move(source)) {
        if (r_.size() != grid_.num_cells()) throw std::invalid_argument("existence vector length must equal cell count");
        for (double v : r_)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("cell existence probabilities must lie in [0,1]");
    }

    [[nodiscard]] const CellGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& r() const { return r_; }
    [[nodiscard]] std::size_t num_cells() const { return r_.size(); }
    [[nodiscard]] bool is_empty(CellIndex j) const { return r_.at(j) < empty_threshold; }

    /// p^j(y): zero outside cell j and for empty cells.
    [[nodiscard]] double spatial_density(CellIndex j, const Vec2& y) const {
        if (is_empty(j) || !grid_.cell_rect(j).contains(y)) return 0.0;
        return source_(y) / r_[j];
    }

    /// Intensity of the cell-MB, sum_j r[j] p^j(y).
    [[nodiscard]] double phd(const Vec2& y) const {
        const auto j = grid_.try_cell_of(y);
        if (!j) return 0.0;
        return r_[*j] * spatial_density(*j, y);
    }

private:
    CellGrid grid_;
    std::vector<double> r_;
    DensityFn source_;
};

/// KLD-minimizing cell-MB approximation of any set density with intensity phd:
/// r[j] is the cell mass and p^j the normalized restriction to the cell.
/// Throws PreconditionError when a cell holds more than one expected object.
template <PositionPhd Phd>
CellMb fit_cell_mb(const Phd& phd, const CellGrid& grid) {
    std::vector<double> r(grid.num_cells());
    for (CellIndex j = 0; j < grid.num_cells(); ++j) {
        const double m = phd_mass(phd, grid, j);
        if (m > 1.0 + 1e-9) {
            std::ostringstream os;
            os << "cell " << j << " holds expected mass " << m << " > 1";
            throw PreconditionError(os.str());
        }
        r[j] = std::clamp(m, 0.0, 1.0);
    }
    auto shared = std::make_shared<const Phd>(phd);
    return CellMb(grid, std::move(r), [shared](const Vec2& y) { return shared->density(y); });
}

namespace detail {

inline double xlogx_ratio(double d1, double d0) {
    if (d1 == 0.0) return 0.0;
    if (d0 <= 0.0) throw SupportError("reference intensity vanishes where the other intensity is positive");
    return d1 * std::log(d1 / d0);
}

} // namespace detail

/// KL divergence between Poisson RFSs with intensities d1 and d0 on the grid
/// domain: N0 - N1 + int D1 log(D1/D0).
///
/// Masses are exact; the log-ratio integral uses an n x n midpoint lattice per
/// cell.
template <PositionPhd Phd1, PositionPhd Phd0>
double kld_poisson(const Phd1& d1, const Phd0& d0, const CellGrid& grid, std::size_t lattice_n = 32) {
    const double n1 = phd_mass(d1, grid);
    const double n0 = phd_mass(d0, grid);
    const double dA = grid.cell_area() / static_cast<double>(lattice_n * lattice_n);
    double integral = 0.0;
    for (CellIndex j = 0; j < grid.num_cells(); ++j) {
        for (const auto& p : grid.lattice(j, lattice_n)) integral += detail::xlogx_ratio(d1.density(p), d0.density(p)) * dA;
    }
    return std::max(0.0, n0 - n1 + integral);
}

/// Exact form for two piecewise-homogeneous intensities on the same grid.
inline double kld_poisson(const PiecewisePhd& d1, const PiecewisePhd& d0) {
    if (d1.lambdas().size() != d0.lambdas().size()) throw std::invalid_argument("intensities live on different grids");
    double kld = 0.0;
    for (std::size_t j = 0; j < d1.lambdas().size(); ++j) {
        const double l1 = d1.lambda(j);
        const double l0 = d0.lambda(j);
        kld += l0 - l1 + detail::xlogx_ratio(l1, l0);
    }
    return std::max(0.0, kld);
}

} // namespace cellmb
