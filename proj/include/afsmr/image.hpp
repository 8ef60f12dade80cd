#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace afsmr {

// Coordinate convention shared by every module: m is the horizontal index
// (column), n the vertical index (row), origin at the top-left pixel.

/// Regular-grid luma image with real-valued samples, stored row-major.
class GrayFrame {
public:
    GrayFrame() = default;

    GrayFrame(int width, int height, double fill = 0.0)
        : width_(width), height_(height)
    {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("GrayFrame: dimensions must be positive");
        values_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    GrayFrame(int width, int height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values))
    {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("GrayFrame: dimensions must be positive");
        if (values_.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("GrayFrame: value count does not match dimensions");
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("GrayFrame: non-finite sample");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(int m, int n) { return values_[static_cast<std::size_t>(n) * width_ + m]; }
    double operator()(int m, int n) const { return values_[static_cast<std::size_t>(n) * width_ + m]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool same_shape(const GrayFrame& other) const
    {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const GrayFrame&, const GrayFrame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Dense per-pixel displacement field; dm horizontal, dn vertical, in pixels.
class MotionField {
public:
    MotionField() = default;

    MotionField(int width, int height)
        : width_(width), height_(height)
    {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("MotionField: dimensions must be positive");
        dm_.assign(static_cast<std::size_t>(width) * height, 0.0);
        dn_.assign(static_cast<std::size_t>(width) * height, 0.0);
    }

    MotionField(int width, int height, std::vector<double> dm, std::vector<double> dn)
        : width_(width), height_(height), dm_(std::move(dm)), dn_(std::move(dn))
    {
        const auto count = static_cast<std::size_t>(width) * height;
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("MotionField: dimensions must be positive");
        if (dm_.size() != count || dn_.size() != count)
            throw std::invalid_argument("MotionField: component length does not match dimensions");
        for (std::size_t i = 0; i < count; ++i)
            if (!std::isfinite(dm_[i]) || !std::isfinite(dn_[i]))
                throw std::invalid_argument("MotionField: non-finite displacement");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return dm_.size(); }

    double& dm(int m, int n) { return dm_[index(m, n)]; }
    double& dn(int m, int n) { return dn_[index(m, n)]; }
    double dm(int m, int n) const { return dm_[index(m, n)]; }
    double dn(int m, int n) const { return dn_[index(m, n)]; }

    const std::vector<double>& dm() const { return dm_; }
    const std::vector<double>& dn() const { return dn_; }

    friend bool operator==(const MotionField&, const MotionField&) = default;

private:
    std::size_t index(int m, int n) const { return static_cast<std::size_t>(n) * width_ + m; }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> dm_;
    std::vector<double> dn_;
};

/// Irregular sample set. Coordinates are continuous and may fall outside the
/// frame; consumers decide how to clip.
struct MeshPointSet {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> vals;

    std::size_t size() const { return xs.size(); }
    bool empty() const { return xs.empty(); }

    void reserve(std::size_t n)
    {
        xs.reserve(n);
        ys.reserve(n);
        vals.reserve(n);
    }

    void push_back(double x, double y, double v)
    {
        xs.push_back(x);
        ys.push_back(y);
        vals.push_back(v);
    }

    void validate() const
    {
        if (xs.size() != ys.size() || xs.size() != vals.size())
            throw std::invalid_argument("MeshPointSet: coordinate and value arrays differ in length");
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || !std::isfinite(vals[i]))
                throw std::invalid_argument("MeshPointSet: non-finite entry at index " + std::to_string(i));
    }
};

/// Mesh whose points sit exactly on the integer grid of `frame`.
inline MeshPointSet grid_mesh(const GrayFrame& frame)
{
    MeshPointSet mesh;
    mesh.reserve(frame.size());
    for (int n = 0; n < frame.height(); ++n)
        for (int m = 0; m < frame.width(); ++m)
            mesh.push_back(m, n, frame(m, n));
    return mesh;
}

}  // namespace afsmr
