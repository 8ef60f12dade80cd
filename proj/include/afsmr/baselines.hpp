#pragma once

#include <afsmr/delaunay.hpp>
#include <afsmr/image.hpp>
#include <afsmr/parallel.hpp>
#include <afsmr/spatial_index.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace afsmr {

struct NweConfig {
    /// Gaussian kernel bandwidth in pixels.
    double bandwidth = 1.0;
    /// Support radius in pixels; <= 0 selects 3 * bandwidth.
    double support_radius = 0.0;

    double radius() const { return support_radius > 0.0 ? support_radius : 3.0 * bandwidth; }

    void validate() const
    {
        if (!(bandwidth > 0.0))
            throw std::invalid_argument("NWE: bandwidth must be positive");
    }
};

namespace detail {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Barycentric coordinates of q in triangle p (unclamped).
inline std::array<double, 3> barycentric(const std::array<Vec2, 3>& p, Vec2 q)
{
    const double area = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    const double b1 = ((q.x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (q.y - p[0].y)) / area;
    const double b2 = ((p[1].x - p[0].x) * (q.y - p[0].y) - (q.x - p[0].x) * (p[1].y - p[0].y)) / area;
    return {1.0 - b1 - b2, b1, b2};
}

}  // namespace detail

/// Clough-Tocher cubic on one triangle split at its centroid into three
/// Bezier sub-patches. `values` and `gradients` are given at the vertices;
/// `edge_factors[k]` fixes the cross-boundary derivative direction on the
/// edge opposite vertex k so that the normal derivative is linear along the
/// edge, which makes adjacent patches C1. `bary` are the query's barycentric
/// coordinates.
inline double clough_tocher_patch(const std::array<detail::Vec2, 3>& p, const std::array<double, 3>& values,
                                  const std::array<detail::Vec2, 3>& gradients,
                                  const std::array<double, 3>& edge_factors, const std::array<double, 3>& bary)
{
    using detail::dot;
    const detail::Vec2 e12{p[1].x - p[0].x, p[1].y - p[0].y};
    const detail::Vec2 e23{p[2].x - p[1].x, p[2].y - p[1].y};
    const detail::Vec2 e31{p[0].x - p[2].x, p[0].y - p[2].y};

    const double f1 = values[0], f2 = values[1], f3 = values[2];
    const double df12 = dot(gradients[0], e12);
    const double df21 = -dot(gradients[1], e12);
    const double df23 = dot(gradients[1], e23);
    const double df32 = -dot(gradients[2], e23);
    const double df31 = dot(gradients[2], e31);
    const double df13 = -dot(gradients[0], e31);

    const double c3000 = f1;
    const double c2100 = (df12 + 3 * c3000) / 3;
    const double c2010 = (df13 + 3 * c3000) / 3;
    const double c0300 = f2;
    const double c1200 = (df21 + 3 * c0300) / 3;
    const double c0210 = (df23 + 3 * c0300) / 3;
    const double c0030 = f3;
    const double c1020 = (df31 + 3 * c0030) / 3;
    const double c0120 = (df32 + 3 * c0030) / 3;

    const double c2001 = (c2100 + c2010 + c3000) / 3;
    const double c0201 = (c1200 + c0300 + c0210) / 3;
    const double c0021 = (c1020 + c0120 + c0030) / 3;

    const auto& g = edge_factors;
    const double c0111 =
        (g[0] * (-c0300 + 3 * c0210 - 3 * c0120 + c0030) + (-c0300 + 2 * c0210 - c0120 + c0021 + c0201)) / 2;
    const double c1011 =
        (g[1] * (-c0030 + 3 * c1020 - 3 * c2010 + c3000) + (-c0030 + 2 * c1020 - c2010 + c2001 + c0021)) / 2;
    const double c1101 =
        (g[2] * (-c3000 + 3 * c2100 - 3 * c1200 + c0300) + (-c3000 + 2 * c2100 - c1200 + c2001 + c0201)) / 2;

    const double c1002 = (c1101 + c1011 + c2001) / 3;
    const double c0102 = (c1101 + c0111 + c0201) / 3;
    const double c0012 = (c1011 + c0111 + c0021) / 3;
    const double c0003 = (c1002 + c0102 + c0012) / 3;

    const double minval = std::min({bary[0], bary[1], bary[2]});
    const double b1 = bary[0] - minval;
    const double b2 = bary[1] - minval;
    const double b3 = bary[2] - minval;
    const double b4 = 3 * minval;

    if (bary[0] == minval) {
        return b2 * b2 * b2 * c0300 + 3 * b2 * b2 * b3 * c0210 + 3 * b2 * b2 * b4 * c0201 +
               3 * b2 * b3 * b3 * c0120 + 6 * b2 * b3 * b4 * c0111 + 3 * b2 * b4 * b4 * c0102 +
               b3 * b3 * b3 * c0030 + 3 * b3 * b3 * b4 * c0021 + 3 * b3 * b4 * b4 * c0012 + b4 * b4 * b4 * c0003;
    }
    if (bary[1] == minval) {
        return b1 * b1 * b1 * c3000 + 3 * b1 * b1 * b3 * c2010 + 3 * b1 * b1 * b4 * c2001 +
               3 * b1 * b3 * b3 * c1020 + 6 * b1 * b3 * b4 * c1011 + 3 * b1 * b4 * b4 * c1002 +
               b3 * b3 * b3 * c0030 + 3 * b3 * b3 * b4 * c0021 + 3 * b3 * b4 * b4 * c0012 + b4 * b4 * b4 * c0003;
    }
    return b1 * b1 * b1 * c3000 + 3 * b1 * b1 * b2 * c2100 + 3 * b1 * b1 * b4 * c2001 +
           3 * b1 * b2 * b2 * c1200 + 6 * b1 * b2 * b4 * c1101 + 3 * b1 * b4 * b4 * c1002 +
           b2 * b2 * b2 * c0300 + 3 * b2 * b2 * b4 * c0201 + 3 * b2 * b4 * b4 * c0102 + b4 * b4 * b4 * c0003;
}

/// Piecewise linear / Clough-Tocher cubic interpolant over the Delaunay
/// triangulation of a mesh. Queries outside the convex hull, or on a mesh
/// whose points are all collinear, return the nearest mesh point's value.
class ScatteredInterpolant {
public:
    explicit ScatteredInterpolant(const MeshPointSet& mesh)
        : mesh_(mesh), tri_(mesh.xs, mesh.ys), nearest_(mesh.xs, mesh.ys)
    {
        mesh.validate();
        if (mesh.empty())
            throw std::invalid_argument("scattered interpolation needs at least one mesh point");

        // Exact duplicates share a vertex, which carries their mean value.
        values_.assign(tri_.vertex_count(), 0.0);
        std::vector<int> counts(tri_.vertex_count(), 0);
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const int v = tri_.vertex_of_point(i);
            if (v < 0)
                continue;
            values_[v] += mesh.vals[i];
            ++counts[v];
        }
        for (std::size_t v = 0; v < values_.size(); ++v)
            values_[v] /= counts[v];
    }

    bool degenerate() const { return tri_.degenerate(); }
    const geometry::DelaunayTriangulation& triangulation() const { return tri_; }

    double nearest_value(double x, double y) const { return mesh_.vals[nearest_.nearest(x, y)]; }

    double linear(double x, double y, int& hint) const
    {
        const auto loc = tri_.locate(x, y, hint);
        if (loc.triangle < 0)
            return nearest_value(x, y);
        const auto& v = tri_.triangles()[loc.triangle].v;
        return loc.bary[0] * values_[v[0]] + loc.bary[1] * values_[v[1]] + loc.bary[2] * values_[v[2]];
    }

    double cubic(double x, double y, int& hint) const
    {
        const auto loc = tri_.locate(x, y, hint);
        if (loc.triangle < 0)
            return nearest_value(x, y);
        ensure_gradients();
        const auto& tri = tri_.triangles()[loc.triangle];
        std::array<detail::Vec2, 3> p;
        std::array<double, 3> f;
        std::array<detail::Vec2, 3> grad;
        for (int i = 0; i < 3; ++i) {
            p[i] = {tri_.vertex_x(tri.v[i]), tri_.vertex_y(tri.v[i])};
            f[i] = values_[tri.v[i]];
            grad[i] = gradients_[tri.v[i]];
        }
        return clough_tocher_patch(p, f, grad, edge_factors(loc.triangle, p), loc.bary);
    }

    /// Vertex gradients from a weighted least-squares plane fit over each
    /// vertex's Delaunay neighbours, weights 1/distance^2. Exact for linear data.
    const std::vector<detail::Vec2>& gradients() const
    {
        ensure_gradients();
        return gradients_;
    }

private:
    void ensure_gradients() const
    {
        if (!gradients_.empty() || tri_.degenerate())
            return;
        const auto nv = tri_.vertex_count();
        std::vector<std::array<double, 5>> normal(nv, {0, 0, 0, 0, 0});  // sxx sxy syy sxf syf
        for (const auto& t : tri_.triangles()) {
            if (!t.alive || t.ghost())
                continue;
            // Each directed edge a->b appears in exactly one finite triangle; the
            // reverse appears in the neighbour (or nowhere on the hull), so hull
            // edges are added from both ends here explicitly.
            for (int i = 0; i < 3; ++i) {
                const int a = t.v[i], b = t.v[(i + 1) % 3];
                const bool hull_edge = tri_.triangles()[t.nb[(i + 2) % 3]].ghost();
                accumulate(normal[a], a, b);
                if (hull_edge)
                    accumulate(normal[b], b, a);
            }
        }
        gradients_.assign(nv, {});
        for (std::size_t v = 0; v < nv; ++v) {
            const auto& s = normal[v];
            const double det = s[0] * s[2] - s[1] * s[1];
            if (std::abs(det) <= 1e-300)
                continue;
            gradients_[v] = {(s[2] * s[3] - s[1] * s[4]) / det, (s[0] * s[4] - s[1] * s[3]) / det};
        }
    }

    void accumulate(std::array<double, 5>& s, int a, int b) const
    {
        const double dx = tri_.vertex_x(b) - tri_.vertex_x(a);
        const double dy = tri_.vertex_y(b) - tri_.vertex_y(a);
        const double df = values_[b] - values_[a];
        const double w = 1.0 / (dx * dx + dy * dy);
        s[0] += w * dx * dx;
        s[1] += w * dx * dy;
        s[2] += w * dy * dy;
        s[3] += w * dx * df;
        s[4] += w * dy * df;
    }

    std::array<double, 3> edge_factors(int t, const std::array<detail::Vec2, 3>& p) const
    {
        std::array<double, 3> g{};
        const auto& tri = tri_.triangles()[t];
        for (int k = 0; k < 3; ++k) {
            const auto& nb = tri_.triangles()[tri.nb[k]];
            if (nb.ghost()) {
                g[k] = -0.5;
                continue;
            }
            detail::Vec2 centroid{};
            for (int i = 0; i < 3; ++i) {
                centroid.x += tri_.vertex_x(nb.v[i]) / 3.0;
                centroid.y += tri_.vertex_y(nb.v[i]) / 3.0;
            }
            const auto y = detail::barycentric(p, centroid);
            if (k == 0)
                g[k] = (2 * y[2] + y[1] - 1) / (2 - 3 * y[2] - 3 * y[1]);
            else if (k == 1)
                g[k] = (2 * y[0] + y[2] - 1) / (2 - 3 * y[0] - 3 * y[2]);
            else
                g[k] = (2 * y[1] + y[0] - 1) / (2 - 3 * y[1] - 3 * y[0]);
        }
        return g;
    }

    const MeshPointSet& mesh_;
    geometry::DelaunayTriangulation tri_;
    PointGrid nearest_;
    std::vector<double> values_;
    mutable std::vector<detail::Vec2> gradients_;
};

namespace detail {

template <typename Eval>
GrayFrame evaluate_on_grid(int width, int height, Eval&& eval)
{
    GrayFrame out(width, height);
    int hint = -1;
    for (int n = 0; n < height; ++n) {
        // Serpentine scan keeps successive queries adjacent for the walk.
        const bool forward = n % 2 == 0;
        for (int k = 0; k < width; ++k) {
            const int m = forward ? k : width - 1 - k;
            out(m, n) = eval(static_cast<double>(m), static_cast<double>(n), hint);
        }
    }
    return out;
}

}  // namespace detail

/// Barycentric interpolation on the Delaunay triangulation (LIN).
inline GrayFrame interpolate_linear(const MeshPointSet& mesh, int width, int height)
{
    const ScatteredInterpolant interp(mesh);
    return detail::evaluate_on_grid(width, height, [&](double x, double y, int& hint) {
        return interp.linear(x, y, hint);
    });
}

/// Clough-Tocher cubic interpolation on the Delaunay triangulation (CUB).
inline GrayFrame interpolate_cubic(const MeshPointSet& mesh, int width, int height)
{
    const ScatteredInterpolant interp(mesh);
    return detail::evaluate_on_grid(width, height, [&](double x, double y, int& hint) {
        return interp.cubic(x, y, hint);
    });
}

/// Nadaraya-Watson estimate with a truncated Gaussian kernel (NWE).
inline GrayFrame interpolate_nwe(const MeshPointSet& mesh, int width, int height, const NweConfig& cfg = {},
                                 unsigned threads = 1)
{
    mesh.validate();
    cfg.validate();
    if (mesh.empty())
        throw std::invalid_argument("NWE needs at least one mesh point");

    const PointGrid index(mesh.xs, mesh.ys, std::max(1.0, cfg.radius()));
    const double radius = cfg.radius();
    const double inv_two_h2 = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
    GrayFrame out(width, height);
    parallel_for(static_cast<std::size_t>(height), threads, [&](std::size_t row) {
        const int n = static_cast<int>(row);
        for (int m = 0; m < width; ++m) {
            double num = 0.0, den = 0.0;
            index.for_each_within(m, n, radius, [&](std::size_t i, double d2) {
                const double w = std::exp(-d2 * inv_two_h2);
                num += w * mesh.vals[i];
                den += w;
            });
            out(m, n) = den > 0.0 ? num / den : mesh.vals[index.nearest(m, n)];
        }
    });
    return out;
}

}  // namespace afsmr
