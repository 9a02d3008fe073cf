#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cellmb {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned rectangle [lo, hi) in position or measurement space.
struct Rect {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Zero();

    [[nodiscard]] double width() const { return hi.x() - lo.x(); }
    [[nodiscard]] double height() const { return hi.y() - lo.y(); }
    [[nodiscard]] double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
    [[nodiscard]] bool empty() const { return !(hi.x() > lo.x() && hi.y() > lo.y()); }
    [[nodiscard]] Vec2 center() const { return 0.5 * (lo + hi); }

    [[nodiscard]] bool contains(const Vec2& p) const {
        return p.x() >= lo.x() && p.x() < hi.x() && p.y() >= lo.y() && p.y() < hi.y();
    }

    [[nodiscard]] Rect intersect(const Rect& o) const {
        Rect r;
        r.lo = lo.cwiseMax(o.lo);
        r.hi = hi.cwiseMin(o.hi);
        return r;
    }

    [[nodiscard]] bool overlaps(const Rect& o) const { return !intersect(o).empty(); }
};

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// P(lo <= X < hi) for X ~ N(mu, sigma^2), computed on the tail that keeps
/// precision when the interval sits far from the mean.
inline double normal_interval_mass(double mu, double sigma, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    if (a > 0.0) {
        return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
    }
    if (b < 0.0) {
        return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
    }
    return 1.0 - 0.5 * std::erfc(-a / std::numbers::sqrt2) - 0.5 * std::erfc(b / std::numbers::sqrt2);
}

/// Bivariate Gaussian with cached information matrix and normalizer.
class Gauss2 {
public:
    Gauss2() = default;
    Gauss2(const Vec2& mean, const Mat2& cov) : mean_(mean), cov_(cov) {
        info_ = cov_.inverse();
        norm_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(cov_.determinant()));
    }

    [[nodiscard]] const Vec2& mean() const { return mean_; }
    [[nodiscard]] const Mat2& cov() const { return cov_; }
    [[nodiscard]] const Mat2& info() const { return info_; }

    [[nodiscard]] double mahalanobis2(const Vec2& x) const {
        const Vec2 d = x - mean_;
        return d.dot(info_ * d);
    }

    [[nodiscard]] double pdf(const Vec2& x) const {
        return norm_ * std::exp(-0.5 * mahalanobis2(x));
    }

    [[nodiscard]] bool is_diagonal() const { return cov_(0, 1) == 0.0 && cov_(1, 0) == 0.0; }

    /// Bounding box of the n-sigma marginal extent.
    [[nodiscard]] Rect bounding_box(double n_sigma) const {
        const Vec2 half(n_sigma * std::sqrt(cov_(0, 0)), n_sigma * std::sqrt(cov_(1, 1)));
        return Rect{mean_ - half, mean_ + half};
    }

private:
    Vec2 mean_ = Vec2::Zero();
    Mat2 cov_ = Mat2::Identity();
    Mat2 info_ = Mat2::Identity();
    double norm_ = 1.0 / (2.0 * std::numbers::pi);
};

/// Probability mass of a bivariate Gaussian inside an axis-aligned rectangle.
///
/// Diagonal covariances use the exact product of univariate CDFs. Otherwise the
/// x-marginal is integrated with composite 16-point Gauss-Legendre panels over
/// the +-8 sigma window clipped to the rectangle, against the exact conditional
/// y-interval probability.
inline double rect_mass(const Gauss2& g, const Rect& r) {
    if (r.empty()) return 0.0;
    const double sx = std::sqrt(g.cov()(0, 0));
    const double sy = std::sqrt(g.cov()(1, 1));
    if (g.is_diagonal()) {
        return normal_interval_mass(g.mean().x(), sx, r.lo.x(), r.hi.x()) *
               normal_interval_mass(g.mean().y(), sy, r.lo.y(), r.hi.y());
    }
    // When the rectangle spans an axis' +-9 sigma range (tail mass < 1e-18),
    // only the other marginal matters.
    constexpr double span = 9.0;
    const bool x_spans = r.lo.x() <= g.mean().x() - span * sx && r.hi.x() >= g.mean().x() + span * sx;
    const bool y_spans = r.lo.y() <= g.mean().y() - span * sy && r.hi.y() >= g.mean().y() + span * sy;
    if (x_spans) return normal_interval_mass(g.mean().y(), sy, r.lo.y(), r.hi.y());
    if (y_spans) return normal_interval_mass(g.mean().x(), sx, r.lo.x(), r.hi.x());
    const double a = std::max(r.lo.x(), g.mean().x() - 8.0 * sx);
    const double b = std::min(r.hi.x(), g.mean().x() + 8.0 * sx);
    if (!(b > a)) return 0.0;
    const double rho_slope = g.cov()(0, 1) / g.cov()(0, 0);
    const double cond_sd = std::sqrt(std::max(g.cov()(1, 1) - g.cov()(0, 1) * rho_slope, 1e-300));
    auto integrand = [&](double x) {
        const double px = std::exp(-0.5 * std::pow((x - g.mean().x()) / sx, 2)) /
                          (sx * std::sqrt(2.0 * std::numbers::pi));
        const double my = g.mean().y() + rho_slope * (x - g.mean().x());
        return px * normal_interval_mass(my, cond_sd, r.lo.y(), r.hi.y());
    };
    // One 16-point panel per 4 sigma of the clipped range.
    const int panels = std::clamp(static_cast<int>(std::ceil((b - a) / (4.0 * sx))), 1, 4);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        total += boost::math::quadrature::gauss<double, 16>::integrate(integrand, a + i * h, a + (i + 1) * h);
    }
    return total;
}

/// Integral over rect r of N(z; s, meas_cov) * N(s; prior) ds, via the Gaussian
/// product identity N(z; m, P+R) * mass of the conditional N(s; c, C) in r.
inline double likelihood_rect_mass(const Vec2& z, const Mat2& meas_cov, const Gauss2& prior, const Rect& r) {
    const Mat2& P = prior.cov();
    const Mat2 S = P + meas_cov;
    const Gauss2 predictive(prior.mean(), S);
    // Beyond 9 sigma of the predictive the product is below 1e-18 of its peak.
    if (predictive.mahalanobis2(z) > 81.0) return 0.0;
    const double scale = predictive.pdf(z);
    const Mat2 gain = P * S.inverse();
    const Vec2 c = prior.mean() + gain * (z - prior.mean());
    Mat2 C = P - gain * P;
    C = 0.5 * (C + C.transpose());
    return scale * rect_mass(Gauss2(c, C), r);
}

} // namespace cellmb
