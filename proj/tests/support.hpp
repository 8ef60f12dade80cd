#pragma once

#include <afsmr/frame_io.hpp>
#include <afsmr/image.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace afsmr::testing {

inline std::filesystem::path data_dir() { return AFSMR_TEST_DATA_DIR; }

inline GrayFrame astronaut() { return read_frame_pgm(data_dir() / "astronaut.pgm"); }

inline GrayFrame crop(const GrayFrame& src, int left, int top, int width, int height)
{
    GrayFrame out(width, height);
    for (int n = 0; n < height; ++n)
        for (int m = 0; m < width; ++m)
            out(m, n) = src(left + m, top + n);
    return out;
}

/// 2x2 box average of `src` starting at (left, top). Shifting the source
/// window by 3 pixels moves the content by exactly 1.5 output pixels.
inline GrayFrame box_decimate(const GrayFrame& src, int left, int top, int width, int height)
{
    GrayFrame out(width, height);
    for (int n = 0; n < height; ++n)
        for (int m = 0; m < width; ++m) {
            const int x = left + 2 * m, y = top + 2 * n;
            out(m, n) = (src(x, y) + src(x + 1, y) + src(x, y + 1) + src(x + 1, y + 1)) / 4.0;
        }
    return out;
}

/// Fresh, empty scratch directory below the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("afsmr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline GrayFrame random_frame(int width, int height, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> d(0, 255);
    GrayFrame f(width, height);
    for (double& v : f.values())
        v = d(rng);
    return f;
}

/// Smooth synthetic texture with values inside [20, 235].
inline GrayFrame smooth_frame(int width, int height, double phase = 0.0)
{
    GrayFrame f(width, height);
    for (int n = 0; n < height; ++n)
        for (int m = 0; m < width; ++m)
            f(m, n) = 128.0 + 60.0 * std::sin(0.21 * m + phase) * std::cos(0.17 * n) + 40.0 * std::sin(0.05 * (m + n));
    return f;
}

inline MeshPointSet random_mesh(int count, double width, double height, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height), uv(0.0, 255.0);
    MeshPointSet mesh;
    for (int i = 0; i < count; ++i) {
        const double x = ux(rng), y = uy(rng);
        mesh.push_back(x, y, uv(rng));
    }
    return mesh;
}

}  // namespace afsmr::testing
