#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace afsmr::geometry {

// Predicates run on coordinates snapped to a 2^-14 pixel lattice, which keeps
// orientation and in-circle determinants exact in 128-bit integers for
// |coordinate| < 2^14. Points outside that range are not triangulated.
inline constexpr double kSnapScale = 16384.0;
inline constexpr double kCoordinateLimit = 16383.0;

struct FixedPoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
    friend bool operator==(const FixedPoint&, const FixedPoint&) = default;
};

inline FixedPoint snap(double x, double y)
{
    return {std::llround(x * kSnapScale), std::llround(y * kSnapScale)};
}

inline bool snappable(double x, double y)
{
    return std::abs(x) <= kCoordinateLimit && std::abs(y) <= kCoordinateLimit;
}

/// +1 if c lies left of a->b, -1 if right, 0 if collinear.
inline int orient(const FixedPoint& a, const FixedPoint& b, const FixedPoint& c)
{
    const __int128 det = static_cast<__int128>(b.x - a.x) * (c.y - a.y) -
                         static_cast<__int128>(b.y - a.y) * (c.x - a.x);
    return (det > 0) - (det < 0);
}

/// +1 if d lies strictly inside the circle through counter-clockwise a, b, c.
inline int incircle(const FixedPoint& a, const FixedPoint& b, const FixedPoint& c, const FixedPoint& d)
{
    const std::int64_t adx = a.x - d.x, ady = a.y - d.y;
    const std::int64_t bdx = b.x - d.x, bdy = b.y - d.y;
    const std::int64_t cdx = c.x - d.x, cdy = c.y - d.y;
    const __int128 alift = static_cast<__int128>(adx) * adx + static_cast<__int128>(ady) * ady;
    const __int128 blift = static_cast<__int128>(bdx) * bdx + static_cast<__int128>(bdy) * bdy;
    const __int128 clift = static_cast<__int128>(cdx) * cdx + static_cast<__int128>(cdy) * cdy;
    const __int128 bc = static_cast<__int128>(bdx) * cdy - static_cast<__int128>(cdx) * bdy;
    const __int128 ca = static_cast<__int128>(cdx) * ady - static_cast<__int128>(adx) * cdy;
    const __int128 ab = static_cast<__int128>(adx) * bdy - static_cast<__int128>(bdx) * ady;
    const __int128 det = alift * bc + blift * ca + clift * ab;
    return (det > 0) - (det < 0);
}

namespace detail {

inline std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y)
{
    constexpr std::uint32_t n = 1u << 16;
    std::uint64_t d = 0;
    for (std::uint32_t s = n / 2; s > 0; s /= 2) {
        const std::uint32_t rx = (x & s) ? 1 : 0;
        const std::uint32_t ry = (y & s) ? 1 : 0;
        d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

}  // namespace detail

/// Incremental (Bowyer-Watson) Delaunay triangulation with exact predicates.
/// The hull is closed by ghost triangles sharing a vertex at infinity, so no
/// bounding super-triangle distorts the result. Cocircular configurations
/// resolve deterministically by insertion order (Hilbert order of the input,
/// ties by input index). Exact duplicate points collapse onto the one with
/// the smallest input index.
class DelaunayTriangulation {
public:
    static constexpr int kInfinite = -1;

    struct Triangle {
        std::array<int, 3> v;   // vertex ids, counter-clockwise; kInfinite only at v[2]
        std::array<int, 3> nb;  // nb[i] is the triangle across the edge opposite v[i]
        bool alive = true;
        bool ghost() const { return v[2] == kInfinite; }
    };

    struct Location {
        int triangle = -1;                 // -1: outside the convex hull
        std::array<double, 3> bary{};      // barycentric weights of the triangle's vertices
    };

    DelaunayTriangulation(std::span<const double> xs, std::span<const double> ys)
    {
        if (xs.size() != ys.size())
            throw std::invalid_argument("triangulation: coordinate arrays differ in length");
        vertex_of_point_.assign(xs.size(), -1);

        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (std::isfinite(xs[i]) && std::isfinite(ys[i]) && snappable(xs[i], ys[i]))
                candidates.push_back(i);

        // Collapse duplicates (on the snapped lattice) onto the smallest index.
        std::vector<std::size_t> by_position = candidates;
        std::vector<FixedPoint> snapped(xs.size());
        for (auto i : candidates)
            snapped[i] = snap(xs[i], ys[i]);
        std::sort(by_position.begin(), by_position.end(), [&](std::size_t a, std::size_t b) {
            if (snapped[a].x != snapped[b].x)
                return snapped[a].x < snapped[b].x;
            if (snapped[a].y != snapped[b].y)
                return snapped[a].y < snapped[b].y;
            return a < b;
        });
        for (std::size_t k = 0; k < by_position.size(); ++k) {
            const auto i = by_position[k];
            if (k > 0 && snapped[by_position[k - 1]] == snapped[i]) {
                vertex_of_point_[i] = vertex_of_point_[by_position[k - 1]];
                continue;
            }
            vertex_of_point_[i] = static_cast<int>(points_.size());
            points_.push_back(snapped[i]);
            xs_.push_back(xs[i]);
            ys_.push_back(ys[i]);
            source_.push_back(i);
        }

        build();
    }

    /// True when fewer than three non-collinear distinct points exist; no
    /// triangles are available then.
    bool degenerate() const { return degenerate_; }

    std::size_t vertex_count() const { return points_.size(); }
    /// Vertex id for input point i, or -1 if the point was not triangulated.
    int vertex_of_point(std::size_t i) const { return vertex_of_point_[i]; }
    /// Input index that defines vertex v.
    std::size_t source_of_vertex(int v) const { return source_[v]; }
    double vertex_x(int v) const { return xs_[v]; }
    double vertex_y(int v) const { return ys_[v]; }

    const std::vector<Triangle>& triangles() const { return triangles_; }

    /// Ids of all live finite triangles.
    std::vector<int> finite_triangles() const
    {
        std::vector<int> out;
        for (int t = 0; t < static_cast<int>(triangles_.size()); ++t)
            if (triangles_[t].alive && !triangles_[t].ghost())
                out.push_back(t);
        return out;
    }

    /// Finds the triangle containing (x, y). `hint` is a triangle id to start
    /// walking from and is updated to the result, which makes coherent query
    /// sequences cheap.
    Location locate(double x, double y, int& hint) const
    {
        Location loc;
        if (degenerate_ || !snappable(x, y))
            return loc;
        if (hint < 0 || hint >= static_cast<int>(triangles_.size()) || !triangles_[hint].alive)
            hint = start_triangle_;
        const int t = walk(snap(x, y), hint);
        hint = t;
        if (triangles_[t].ghost())
            return loc;

        const auto& tri = triangles_[t].v;
        const double x0 = xs_[tri[0]], y0 = ys_[tri[0]];
        const double x1 = xs_[tri[1]], y1 = ys_[tri[1]];
        const double x2 = xs_[tri[2]], y2 = ys_[tri[2]];
        const double area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        double b1 = ((x - x0) * (y2 - y0) - (x2 - x0) * (y - y0)) / area;
        double b2 = ((x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)) / area;
        b1 = std::clamp(b1, 0.0, 1.0);
        b2 = std::clamp(b2, 0.0, 1.0 - b1);
        loc.triangle = t;
        loc.bary = {1.0 - b1 - b2, b1, b2};
        return loc;
    }

private:
    const FixedPoint& pt(int v) const { return points_[v]; }

    static int index_not_in(const Triangle& t, int a, int b)
    {
        for (int i = 0; i < 3; ++i)
            if (t.v[i] != a && t.v[i] != b)
                return i;
        throw std::logic_error("triangulation: edge not found");
    }

    void set_neighbor(int t, int a, int b, int neighbor)
    {
        triangles_[t].nb[index_not_in(triangles_[t], a, b)] = neighbor;
    }

    int make_triangle(int a, int b, int c)
    {
        // Rotate so a vertex at infinity sits at index 2.
        if (a == kInfinite) {
            a = b;
            b = c;
            c = kInfinite;
        } else if (b == kInfinite) {
            b = a;
            a = c;
            c = kInfinite;
        }
        Triangle t{{a, b, c}, {-1, -1, -1}, true};
        if (!free_.empty()) {
            const int id = free_.back();
            free_.pop_back();
            triangles_[id] = t;
            return id;
        }
        triangles_.push_back(t);
        conflict_stamp_.push_back(0);
        checked_stamp_.push_back(0);
        return static_cast<int>(triangles_.size()) - 1;
    }

    bool strictly_between(const FixedPoint& a, const FixedPoint& b, const FixedPoint& p) const
    {
        // p is collinear with a-b; test the projection onto the segment.
        const __int128 dot = static_cast<__int128>(p.x - a.x) * (b.x - a.x) +
                             static_cast<__int128>(p.y - a.y) * (b.y - a.y);
        const __int128 len = static_cast<__int128>(b.x - a.x) * (b.x - a.x) +
                             static_cast<__int128>(b.y - a.y) * (b.y - a.y);
        return dot > 0 && dot < len;
    }

    bool in_conflict(int t, const FixedPoint& p) const
    {
        const auto& tri = triangles_[t];
        if (tri.ghost()) {
            const int o = orient(pt(tri.v[0]), pt(tri.v[1]), p);
            if (o != 0)
                return o > 0;
            return strictly_between(pt(tri.v[0]), pt(tri.v[1]), p);
        }
        return incircle(pt(tri.v[0]), pt(tri.v[1]), pt(tri.v[2]), p) > 0;
    }

    int walk(const FixedPoint& p, int t) const
    {
        if (triangles_[t].ghost())
            t = triangles_[t].nb[2];
        unsigned rotation = 0;
        for (;;) {
            const auto& tri = triangles_[t];
            if (tri.ghost())
                return t;
            bool moved = false;
            ++rotation;
            for (int j = 0; j < 3; ++j) {
                const int i = static_cast<int>((j + rotation) % 3);
                if (orient(pt(tri.v[(i + 1) % 3]), pt(tri.v[(i + 2) % 3]), p) < 0) {
                    t = tri.nb[i];
                    moved = true;
                    break;
                }
            }
            if (!moved)
                return t;
        }
    }

    void build()
    {
        const int n = static_cast<int>(points_.size());
        if (n < 3) {
            degenerate_ = true;
            return;
        }

        // Hilbert order over the bounding box of the snapped points.
        std::int64_t xmin = points_[0].x, xmax = xmin, ymin = points_[0].y, ymax = ymin;
        for (const auto& p : points_) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        const double extent = static_cast<double>(std::max<std::int64_t>({xmax - xmin, ymax - ymin, 1}));
        std::vector<std::uint64_t> key(n);
        for (int v = 0; v < n; ++v) {
            const auto hx = static_cast<std::uint32_t>((points_[v].x - xmin) / extent * 65535.0);
            const auto hy = static_cast<std::uint32_t>((points_[v].y - ymin) / extent * 65535.0);
            key[v] = detail::hilbert_index(hx, hy);
        }
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return key[a] != key[b] ? key[a] < key[b] : source_[a] < source_[b];
        });

        // Seed with the first three non-collinear points.
        const int a = order[0], b = order[1];
        int c_pos = -1;
        for (int k = 2; k < n; ++k)
            if (orient(pt(a), pt(b), pt(order[k])) != 0) {
                c_pos = k;
                break;
            }
        if (c_pos < 0) {
            degenerate_ = true;
            return;
        }
        int c = order[c_pos];
        int b2 = b;
        if (orient(pt(a), pt(b2), pt(c)) < 0)
            std::swap(b2, c);

        const int t0 = make_triangle(a, b2, c);
        const int g_ab = make_triangle(b2, a, kInfinite);
        const int g_bc = make_triangle(c, b2, kInfinite);
        const int g_ca = make_triangle(a, c, kInfinite);
        set_neighbor(t0, a, b2, g_ab);
        set_neighbor(t0, b2, c, g_bc);
        set_neighbor(t0, c, a, g_ca);
        set_neighbor(g_ab, a, b2, t0);
        set_neighbor(g_bc, b2, c, t0);
        set_neighbor(g_ca, c, a, t0);
        set_neighbor(g_ab, a, kInfinite, g_ca);
        set_neighbor(g_ca, a, kInfinite, g_ab);
        set_neighbor(g_ab, b2, kInfinite, g_bc);
        set_neighbor(g_bc, b2, kInfinite, g_ab);
        set_neighbor(g_bc, c, kInfinite, g_ca);
        set_neighbor(g_ca, c, kInfinite, g_bc);
        start_triangle_ = t0;

        int hint = t0;
        for (int k = 2; k < n; ++k) {
            if (k == c_pos)
                continue;
            hint = insert(order[k], hint);
        }
        degenerate_ = false;

        for (int t = 0; t < static_cast<int>(triangles_.size()); ++t)
            if (triangles_[t].alive && !triangles_[t].ghost()) {
                start_triangle_ = t;
                break;
            }
    }

    int insert(int v, int hint)
    {
        const FixedPoint& p = pt(v);
        const int start = walk(p, hint);
        ++stamp_;

        cavity_.clear();
        boundary_.clear();
        cavity_.push_back(start);
        conflict_stamp_[start] = stamp_;
        for (std::size_t k = 0; k < cavity_.size(); ++k) {
            const int t = cavity_[k];
            for (int i = 0; i < 3; ++i) {
                const int nb = triangles_[t].nb[i];
                if (conflict_stamp_[nb] == stamp_)
                    continue;
                if (checked_stamp_[nb] != stamp_ && in_conflict(nb, p)) {
                    conflict_stamp_[nb] = stamp_;
                    cavity_.push_back(nb);
                    continue;
                }
                checked_stamp_[nb] = stamp_;
                boundary_.push_back({triangles_[t].v[(i + 1) % 3], triangles_[t].v[(i + 2) % 3], nb});
            }
        }

        for (int t : cavity_) {
            triangles_[t].alive = false;
            free_.push_back(t);
        }

        // One new triangle per boundary edge, fanned around v.
        fan_.clear();
        int result = -1;
        for (const auto& edge : boundary_) {
            const int t = make_triangle(edge.a, edge.b, v);
            set_neighbor(t, edge.a, edge.b, edge.outside);
            set_neighbor(edge.outside, edge.a, edge.b, t);
            fan_.push_back({edge.a, t});
            if (!triangles_[t].ghost())
                result = t;
        }
        std::sort(fan_.begin(), fan_.end());
        for (const auto& [a, self] : fan_) {
            const auto& tri = triangles_[self];
            // The fan triangle starting at this edge's end vertex shares (end, v).
            int end = kInfinite;
            for (int i = 0; i < 3; ++i)
                if (tri.v[i] == a)
                    end = tri.v[(i + 1) % 3];
            const auto it = std::lower_bound(fan_.begin(), fan_.end(), std::pair<int, int>{end, -1});
            set_neighbor(self, end, v, it->second);
            set_neighbor(it->second, end, v, self);
        }
        return result >= 0 ? result : fan_.front().second;
    }

    struct BoundaryEdge {
        int a, b, outside;
    };

    std::vector<FixedPoint> points_;
    std::vector<double> xs_, ys_;
    std::vector<std::size_t> source_;
    std::vector<int> vertex_of_point_;
    std::vector<Triangle> triangles_;
    std::vector<int> free_;
    std::vector<unsigned> conflict_stamp_, checked_stamp_;
    unsigned stamp_ = 0;
    std::vector<int> cavity_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<std::pair<int, int>> fan_;
    int start_triangle_ = 0;
    bool degenerate_ = true;
};

}  // namespace afsmr::geometry
