#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace afsmr {

/// Uniform bucket grid over a 2-D point cloud for nearest-neighbour and
/// fixed-radius queries. Holds indices into the caller's coordinate arrays,
/// which must outlive the index.
class PointGrid {
public:
    PointGrid(std::span<const double> xs, std::span<const double> ys, double cell_size = 2.0)
        : xs_(xs), ys_(ys), cell_(cell_size)
    {
        if (xs.size() != ys.size())
            throw std::invalid_argument("PointGrid: coordinate arrays differ in length");
        if (!(cell_size > 0.0))
            throw std::invalid_argument("PointGrid: cell size must be positive");
        if (xs.empty())
            return;

        auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
        auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
        x0_ = *xmin;
        y0_ = *ymin;
        // Keep the bucket count bounded for sparse far-flung clouds.
        const double span = std::max(*xmax - x0_, *ymax - y0_);
        const double max_cells = 4.0 * std::sqrt(static_cast<double>(xs.size())) + 16.0;
        cell_ = std::max(cell_, span / max_cells);
        cols_ = static_cast<int>(std::floor((*xmax - x0_) / cell_)) + 1;
        rows_ = static_cast<int>(std::floor((*ymax - y0_) / cell_)) + 1;

        std::vector<std::size_t> counts(static_cast<std::size_t>(cols_) * rows_ + 1, 0);
        std::vector<std::size_t> cell_of(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            cell_of[i] = bucket(col_of(xs[i]), row_of(ys[i]));
            ++counts[cell_of[i] + 1];
        }
        for (std::size_t c = 1; c < counts.size(); ++c)
            counts[c] += counts[c - 1];
        offsets_ = counts;
        items_.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            items_[counts[cell_of[i]]++] = i;
    }

    std::size_t size() const { return xs_.size(); }

    /// Index of the closest point; ties go to the smallest index.
    std::size_t nearest(double x, double y) const
    {
        if (xs_.empty())
            throw std::logic_error("PointGrid::nearest on empty point set");
        const int qc = std::clamp(col_of(x), 0, cols_ - 1);
        const int qr = std::clamp(row_of(y), 0, rows_ - 1);

        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        const int max_ring = std::max(cols_, rows_);
        for (int ring = 0; ring <= max_ring; ++ring) {
            // Unvisited rings are at least (ring - 1) cells away.
            if (ring > 0) {
                const double bound = (ring - 1) * cell_;
                if (best_d2 < bound * bound)
                    break;
            }
            visit_ring(qc, qr, ring, [&](std::size_t i) {
                const double dx = xs_[i] - x, dy = ys_[i] - y;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                    best_d2 = d2;
                    best = i;
                }
            });
        }
        return best;
    }

    /// Calls fn(index, squared_distance) for every point within `radius`.
    template <typename Fn>
    void for_each_within(double x, double y, double radius, Fn&& fn) const
    {
        if (xs_.empty())
            return;
        const double r2 = radius * radius;
        const int c0 = std::max(0, col_of(x - radius)), c1 = std::min(cols_ - 1, col_of(x + radius));
        const int r0 = std::max(0, row_of(y - radius)), r1 = std::min(rows_ - 1, row_of(y + radius));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                const auto b = bucket(c, r);
                for (std::size_t k = offsets_[b]; k < offsets_[b + 1]; ++k) {
                    const std::size_t i = items_[k];
                    const double dx = xs_[i] - x, dy = ys_[i] - y;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 <= r2)
                        fn(i, d2);
                }
            }
    }

private:
    int col_of(double x) const
    {
        const double c = std::floor((x - x0_) / cell_);
        return static_cast<int>(std::clamp(c, -1.0e9, 1.0e9));
    }
    int row_of(double y) const
    {
        const double r = std::floor((y - y0_) / cell_);
        return static_cast<int>(std::clamp(r, -1.0e9, 1.0e9));
    }
    std::size_t bucket(int c, int r) const { return static_cast<std::size_t>(r) * cols_ + c; }

    template <typename Fn>
    void visit_cell(int c, int r, Fn& fn) const
    {
        if (c < 0 || r < 0 || c >= cols_ || r >= rows_)
            return;
        const auto b = bucket(c, r);
        for (std::size_t k = offsets_[b]; k < offsets_[b + 1]; ++k)
            fn(items_[k]);
    }

    template <typename Fn>
    void visit_ring(int qc, int qr, int ring, Fn&& fn) const
    {
        if (ring == 0) {
            visit_cell(qc, qr, fn);
            return;
        }
        for (int c = qc - ring; c <= qc + ring; ++c) {
            visit_cell(c, qr - ring, fn);
            visit_cell(c, qr + ring, fn);
        }
        for (int r = qr - ring + 1; r <= qr + ring - 1; ++r) {
            visit_cell(qc - ring, r, fn);
            visit_cell(qc + ring, r, fn);
        }
    }

    std::span<const double> xs_;
    std::span<const double> ys_;
    double cell_;
    double x0_ = 0.0, y0_ = 0.0;
    int cols_ = 1, rows_ = 1;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> items_;
};

}  // namespace afsmr
