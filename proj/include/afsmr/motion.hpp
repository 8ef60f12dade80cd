#pragma once

#include <afsmr/image.hpp>
#include <afsmr/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <variant>

namespace afsmr {

/// Integer-pel exhaustive block matching, sum of absolute differences.
struct BlockMatchConfig {
    int block_size = 8;
    int search_range = 8;
    unsigned threads = 1;

    void validate() const
    {
        if (block_size < 1)
            throw std::invalid_argument("block matching: block_size must be >= 1");
        if (search_range < 0)
            throw std::invalid_argument("block matching: search_range must be >= 0");
    }
};

struct GlobalTranslation {
    double dx = 0.0;
    double dy = 0.0;
};

/// Maps (m, n) to (a11 m + a12 n + tx, a21 m + a22 n + ty).
struct AffineMotion {
    double a11 = 1.0, a12 = 0.0;
    double a21 = 0.0, a22 = 1.0;
    double tx = 0.0, ty = 0.0;
};

using SyntheticFlowSpec = std::variant<GlobalTranslation, AffineMotion>;

/// Forward motion from `prev` to `next`: each block of prev receives the
/// displacement of its best match in next. Candidates outside the frame read
/// replicated border pixels. Ties go to the smallest displacement magnitude,
/// then to the lexicographically smallest (dn, dm).
inline MotionField estimate_block_matching(const GrayFrame& prev, const GrayFrame& next,
                                           const BlockMatchConfig& cfg = {})
{
    cfg.validate();
    if (!prev.same_shape(next))
        throw std::invalid_argument("block matching: frame dimensions differ");

    const int width = prev.width();
    const int height = prev.height();
    const int blocks_x = (width + cfg.block_size - 1) / cfg.block_size;
    const int blocks_y = (height + cfg.block_size - 1) / cfg.block_size;
    MotionField field(width, height);

    auto sample_next = [&](int m, int n) {
        return next(std::clamp(m, 0, width - 1), std::clamp(n, 0, height - 1));
    };

    parallel_for(static_cast<std::size_t>(blocks_x) * blocks_y, cfg.threads, [&](std::size_t b) {
        const int left = static_cast<int>(b % blocks_x) * cfg.block_size;
        const int top = static_cast<int>(b / blocks_x) * cfg.block_size;
        const int right = std::min(left + cfg.block_size, width);
        const int bottom = std::min(top + cfg.block_size, height);

        double best_cost = std::numeric_limits<double>::infinity();
        std::tuple<int, int, int> best_key{std::numeric_limits<int>::max(), 0, 0};
        int best_dm = 0, best_dn = 0;
        for (int dn = -cfg.search_range; dn <= cfg.search_range; ++dn) {
            for (int dm = -cfg.search_range; dm <= cfg.search_range; ++dm) {
                double cost = 0.0;
                for (int n = top; n < bottom && cost <= best_cost; ++n)
                    for (int m = left; m < right; ++m)
                        cost += std::abs(prev(m, n) - sample_next(m + dm, n + dn));
                std::tuple<int, int, int> key{dm * dm + dn * dn, dn, dm};
                if (cost < best_cost || (cost == best_cost && key < best_key)) {
                    best_cost = cost;
                    best_key = key;
                    best_dm = dm;
                    best_dn = dn;
                }
            }
        }
        for (int n = top; n < bottom; ++n)
            for (int m = left; m < right; ++m) {
                field.dm(m, n) = best_dm;
                field.dn(m, n) = best_dn;
            }
    });
    return field;
}

inline MotionField synthesize_flow(const SyntheticFlowSpec& spec, int width, int height)
{
    MotionField field(width, height);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            for (int n = 0; n < height; ++n)
                for (int m = 0; m < width; ++m) {
                    if constexpr (std::is_same_v<T, GlobalTranslation>) {
                        field.dm(m, n) = s.dx;
                        field.dn(m, n) = s.dy;
                    } else {
                        field.dm(m, n) = s.a11 * m + s.a12 * n + s.tx - m;
                        field.dn(m, n) = s.a21 * m + s.a22 * n + s.ty - n;
                    }
                }
        },
        spec);
    return field;
}

/// Shifts every pixel of `prev` a fraction `t` along its forward
/// displacement. t = 0.5 lands on the temporal midpoint between the frames
/// the flow connects. Points leaving the frame are kept.
inline MeshPointSet motion_compensate_forward(const GrayFrame& prev, const MotionField& flow, double t = 0.5)
{
    if (prev.width() != flow.width() || prev.height() != flow.height())
        throw std::invalid_argument("motion compensation: frame and flow dimensions differ");
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("motion compensation: temporal position must lie in (0, 1)");

    MeshPointSet mesh;
    mesh.reserve(prev.size());
    for (int n = 0; n < prev.height(); ++n)
        for (int m = 0; m < prev.width(); ++m)
            mesh.push_back(m + t * flow.dm(m, n), n + t * flow.dn(m, n), prev(m, n));
    return mesh;
}

}  // namespace afsmr
