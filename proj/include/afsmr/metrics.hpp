#pragma once

#include <afsmr/image.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace afsmr {

/// Rounds to 8-bit levels, mimicking evaluation on stored files.
inline GrayFrame quantize(const GrayFrame& frame)
{
    GrayFrame out = frame;
    for (double& v : out.values())
        v = std::clamp(std::round(v), 0.0, 255.0);
    return out;
}

inline double mean_squared_error(const GrayFrame& reference, const GrayFrame& test)
{
    if (!reference.same_shape(test))
        throw std::invalid_argument("metrics: frame dimensions differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.values()[i] - test.values()[i];
        sum += d * d;
    }
    return sum / static_cast<double>(reference.size());
}

/// Peak signal-to-noise ratio in dB for peak 255; +inf for identical frames.
inline double psnr(const GrayFrame& reference, const GrayFrame& test)
{
    const double mse = mean_squared_error(reference, test);
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

struct SsimParams {
    int window = 11;
    double gaussian_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

/// Mean structural similarity over all valid (fully inside) window positions,
/// Gaussian-weighted local statistics.
inline double ssim(const GrayFrame& reference, const GrayFrame& test, const SsimParams& p = {})
{
    if (!reference.same_shape(test))
        throw std::invalid_argument("metrics: frame dimensions differ");
    const int w = reference.width(), h = reference.height();
    if (w < p.window || h < p.window)
        throw std::invalid_argument("ssim: frame " + std::to_string(w) + "x" + std::to_string(h) +
                                    " is smaller than the " + std::to_string(p.window) + "-pixel window");
    // Contracted multiply-adds can leave identical inputs a few ulps off 1.
    if (reference == test)
        return 1.0;

    std::vector<double> kernel(p.window);
    double ksum = 0.0;
    const int half = p.window / 2;
    for (int i = 0; i < p.window; ++i) {
        const double d = i - half;
        kernel[i] = std::exp(-d * d / (2.0 * p.gaussian_sigma * p.gaussian_sigma));
        ksum += kernel[i];
    }
    for (double& k : kernel)
        k /= ksum;

    const int ow = w - p.window + 1, oh = h - p.window + 1;
    // Separable valid-mode filtering: rows first, then columns.
    auto filter = [&](auto&& sample) {
        std::vector<double> rows(static_cast<std::size_t>(ow) * h);
        for (int n = 0; n < h; ++n)
            for (int m = 0; m < ow; ++m) {
                double s = 0.0;
                for (int i = 0; i < p.window; ++i)
                    s += kernel[i] * sample(m + i, n);
                rows[static_cast<std::size_t>(n) * ow + m] = s;
            }
        std::vector<double> out(static_cast<std::size_t>(ow) * oh);
        for (int n = 0; n < oh; ++n)
            for (int m = 0; m < ow; ++m) {
                double s = 0.0;
                for (int i = 0; i < p.window; ++i)
                    s += kernel[i] * rows[static_cast<std::size_t>(n + i) * ow + m];
                out[static_cast<std::size_t>(n) * ow + m] = s;
            }
        return out;
    };

    const auto& x = reference;
    const auto& y = test;
    const auto mu_x = filter([&](int m, int n) { return x(m, n); });
    const auto mu_y = filter([&](int m, int n) { return y(m, n); });
    const auto xx = filter([&](int m, int n) { return x(m, n) * x(m, n); });
    const auto yy = filter([&](int m, int n) { return y(m, n) * y(m, n); });
    const auto xy = filter([&](int m, int n) { return x(m, n) * y(m, n); });

    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double vx = xx[i] - mx * mx, vy = yy[i] - my * my, cov = xy[i] - mx * my;
        const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

}  // namespace afsmr
