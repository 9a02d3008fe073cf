#pragma once

#include "cellmb/errors.hpp"
#include "cellmb/gaussian.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cellmb {

using CellIndex = std::size_t;

/// Row-major tessellation of the scene into equally sized rectangular cells.
///
/// Cell j covers [x0, x0 + w) x [y0, y0 + h); index j = row * n_cols + col.
/// The same grid is used for position space and (through the position
/// extraction H) for measurement space. The ROI mask marks cells where
/// undiscovered objects may live, the FoR mask marks cells the sensor can view.
class CellGrid {
public:
    CellGrid() = default;

    CellGrid(Vec2 origin, Vec2 cell_size, std::size_t n_cols, std::size_t n_rows)
        : CellGrid(origin, cell_size, n_cols, n_rows,
                   std::vector<bool>(n_cols * n_rows, true),
                   std::vector<bool>(n_cols * n_rows, true)) {}

    CellGrid(Vec2 origin, Vec2 cell_size, std::size_t n_cols, std::size_t n_rows,
             std::vector<bool> roi_mask, std::vector<bool> for_mask)
        : origin_(origin), cell_size_(cell_size), n_cols_(n_cols), n_rows_(n_rows),
          roi_mask_(std::move(roi_mask)), for_mask_(std::move(for_mask)) {
        if (n_cols_ == 0 || n_rows_ == 0) throw ConfigError("grid must have at least one cell");
        if (!(cell_size_.x() > 0.0 && cell_size_.y() > 0.0)) throw ConfigError("cell size must be positive");
        if (roi_mask_.size() != num_cells() || for_mask_.size() != num_cells())
            throw ConfigError("mask length does not match the number of cells");
    }

    [[nodiscard]] std::size_t n_cols() const { return n_cols_; }
    [[nodiscard]] std::size_t n_rows() const { return n_rows_; }
    [[nodiscard]] std::size_t num_cells() const { return n_cols_ * n_rows_; }
    [[nodiscard]] const Vec2& origin() const { return origin_; }
    [[nodiscard]] const Vec2& cell_size() const { return cell_size_; }
    [[nodiscard]] double cell_area() const { return cell_size_.x() * cell_size_.y(); }

    [[nodiscard]] const std::vector<bool>& roi_mask() const { return roi_mask_; }
    [[nodiscard]] const std::vector<bool>& for_mask() const { return for_mask_; }
    [[nodiscard]] bool in_roi(CellIndex j) const { return roi_mask_.at(j); }
    [[nodiscard]] bool in_for(CellIndex j) const { return for_mask_.at(j); }

    [[nodiscard]] std::size_t col(CellIndex j) const { return j % n_cols_; }
    [[nodiscard]] std::size_t row(CellIndex j) const { return j / n_cols_; }
    [[nodiscard]] CellIndex index(std::size_t col, std::size_t row) const { return row * n_cols_ + col; }

    [[nodiscard]] Rect bounds() const {
        return Rect{origin_, origin_ + Vec2(cell_size_.x() * n_cols_, cell_size_.y() * n_rows_)};
    }

    [[nodiscard]] Rect cell_rect(CellIndex j) const {
        check_index(j);
        const Vec2 lo = origin_ + Vec2(cell_size_.x() * col(j), cell_size_.y() * row(j));
        return Rect{lo, lo + cell_size_};
    }

    void check_index(CellIndex j) const {
        if (j >= num_cells()) throw std::domain_error("cell index " + std::to_string(j) + " out of range");
    }

    /// Cell containing p. Cells are closed on the left/top edge, so a point on a
    /// shared edge belongs to the right/lower neighbour.
    [[nodiscard]] CellIndex cell_of(const Vec2& p) const {
        if (!bounds().contains(p)) throw std::domain_error("point outside grid bounds");
        const Vec2 rel = (p - origin_).cwiseQuotient(cell_size_);
        auto c = static_cast<std::size_t>(std::floor(rel.x()));
        auto r = static_cast<std::size_t>(std::floor(rel.y()));
        // Guard the last ulp below the far edge against rounding up.
        c = std::min(c, n_cols_ - 1);
        r = std::min(r, n_rows_ - 1);
        return index(c, r);
    }

    [[nodiscard]] std::optional<CellIndex> try_cell_of(const Vec2& p) const {
        if (!bounds().contains(p)) return std::nullopt;
        return cell_of(p);
    }

    /// n x n midpoint lattice of cell j, row-major.
    [[nodiscard]] std::vector<Vec2> lattice(CellIndex j, std::size_t n) const {
        const Rect r = cell_rect(j);
        std::vector<Vec2> pts;
        pts.reserve(n * n);
        const Vec2 step = cell_size_ / static_cast<double>(n);
        for (std::size_t iy = 0; iy < n; ++iy)
            for (std::size_t ix = 0; ix < n; ++ix)
                pts.emplace_back(r.lo.x() + (ix + 0.5) * step.x(), r.lo.y() + (iy + 0.5) * step.y());
        return pts;
    }

private:
    Vec2 origin_ = Vec2::Zero();
    Vec2 cell_size_ = Vec2::Ones();
    std::size_t n_cols_ = 1;
    std::size_t n_rows_ = 1;
    std::vector<bool> roi_mask_{true};
    std::vector<bool> for_mask_{true};
};

/// Cell-aligned sensor footprint: a block of width x height cells anchored at
/// its top-left cell.
struct Fov {
    std::size_t anchor_col = 0;
    std::size_t anchor_row = 0;
    std::size_t width_cells = 1;
    std::size_t height_cells = 1;

    bool operator==(const Fov&) const = default;

    [[nodiscard]] CellIndex anchor_index(const CellGrid& grid) const { return grid.index(anchor_col, anchor_row); }

    [[nodiscard]] bool fits(const CellGrid& grid) const {
        return width_cells > 0 && height_cells > 0 && anchor_col + width_cells <= grid.n_cols() &&
               anchor_row + height_cells <= grid.n_rows();
    }

    [[nodiscard]] bool contains_cell(const CellGrid& grid, CellIndex j) const {
        const auto c = grid.col(j);
        const auto r = grid.row(j);
        return c >= anchor_col && c < anchor_col + width_cells && r >= anchor_row && r < anchor_row + height_cells;
    }

    [[nodiscard]] Rect rect(const CellGrid& grid) const {
        const Vec2 lo = grid.origin() + Vec2(grid.cell_size().x() * anchor_col, grid.cell_size().y() * anchor_row);
        return Rect{lo, lo + Vec2(grid.cell_size().x() * width_cells, grid.cell_size().y() * height_cells)};
    }
};

/// Indices of the cells covered by fov, row-major.
inline std::vector<CellIndex> fov_cells(const CellGrid& grid, const Fov& fov) {
    if (!fov.fits(grid)) throw std::domain_error("field of view exceeds grid bounds");
    std::vector<CellIndex> cells;
    cells.reserve(fov.width_cells * fov.height_cells);
    for (std::size_t r = fov.anchor_row; r < fov.anchor_row + fov.height_cells; ++r)
        for (std::size_t c = fov.anchor_col; c < fov.anchor_col + fov.width_cells; ++c)
            cells.push_back(grid.index(c, r));
    return cells;
}

/// Per-cell membership flags for fov.
inline std::vector<bool> fov_mask(const CellGrid& grid, const Fov& fov) {
    std::vector<bool> mask(grid.num_cells(), false);
    for (auto j : fov_cells(grid, fov)) mask[j] = true;
    return mask;
}

/// Optional limit on how far the footprint may move between consecutive steps
/// (Chebyshev distance between anchors, in cells).
struct MotionLimit {
    Fov previous;
    std::size_t max_step_cells = 0;
};

/// Every placement of a w x h footprint whose cells all lie in the FoR, in
/// row-major anchor order.
inline std::vector<Fov> admissible_fovs(const CellGrid& grid, std::size_t w, std::size_t h,
                                        const std::optional<MotionLimit>& limit = std::nullopt) {
    std::vector<Fov> out;
    if (w == 0 || h == 0 || w > grid.n_cols() || h > grid.n_rows()) return out;
    for (std::size_t r = 0; r + h <= grid.n_rows(); ++r) {
        for (std::size_t c = 0; c + w <= grid.n_cols(); ++c) {
            Fov f{c, r, w, h};
            if (limit) {
                const auto dc = c > limit->previous.anchor_col ? c - limit->previous.anchor_col
                                                               : limit->previous.anchor_col - c;
                const auto dr = r > limit->previous.anchor_row ? r - limit->previous.anchor_row
                                                               : limit->previous.anchor_row - r;
                if (std::max(dc, dr) > limit->max_step_cells) continue;
            }
            bool ok = true;
            for (auto j : fov_cells(grid, f)) {
                if (!grid.in_for(j)) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.push_back(f);
        }
    }
    return out;
}

} // namespace cellmb
