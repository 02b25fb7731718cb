#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "skyreg/rng.hpp"

namespace skyreg {

/// Row-major single-channel intensity grid. Loaded images keep values in
/// [0,1]; derived fields (log magnitudes, gradients, correlation responses)
/// reuse the container without that restriction.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Raster() = default;
    Raster(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w < 0 ? 0 : w) * static_cast<std::size_t>(h < 0 ? 0 : h), fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("Raster: dimensions must be positive");
    }

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t pixel_count() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_dims(const Raster& other) const { return width == other.width && height == other.height; }
};

/// Bilinear lookup with zero fill outside the grid.
inline double bilinear_sample(const Raster& img, double x, double y) {
    if (!(x > -1.0) || !(y > -1.0) || !(x < img.width) || !(y < img.height)) return 0.0;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const auto tap = [&img](int px, int py) -> double {
        if (px < 0 || py < 0 || px >= img.width || py >= img.height) return 0.0;
        return img.at(px, py);
    };
    const double top = (1.0 - fx) * tap(x0, y0) + fx * tap(x0 + 1, y0);
    const double bottom = (1.0 - fx) * tap(x0, y0 + 1) + fx * tap(x0 + 1, y0 + 1);
    return (1.0 - fy) * top + fy * bottom;
}

/// Pointwise separable Hann window. Corners go to zero, the centre of an
/// odd-sized raster keeps its value.
inline Raster apodize(const Raster& image) {
    if (image.empty()) throw std::invalid_argument("apodize: empty raster");
    const auto window = [](int n) {
        std::vector<double> w(static_cast<std::size_t>(n), 1.0);
        if (n > 1) {
            for (int i = 0; i < n; ++i)
                w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
        }
        return w;
    };
    const std::vector<double> wx = window(image.width);
    const std::vector<double> wy = window(image.height);
    Raster out(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            out.at(x, y) = image.at(x, y) * wx[static_cast<std::size_t>(x)] * wy[static_cast<std::size_t>(y)];
    return out;
}

/// Content moves by (+dx, +dy) with wrap-around.
inline Raster circular_shift(const Raster& image, int dx, int dy) {
    if (image.empty()) throw std::invalid_argument("circular_shift: empty raster");
    const auto wrap = [](int v, int n) {
        v %= n;
        return v < 0 ? v + n : v;
    };
    Raster out(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            out.at(x, y) = image.at(wrap(x - dx, image.width), wrap(y - dy, image.height));
    return out;
}

/// Bilinear resize with pixel-centre alignment. Same-size calls are exact.
inline Raster resample_bilinear(const Raster& image, int out_width, int out_height) {
    if (image.empty()) throw std::invalid_argument("resample_bilinear: empty raster");
    if (out_width <= 0 || out_height <= 0)
        throw std::invalid_argument("resample_bilinear: output dimensions must be positive");
    Raster out(out_width, out_height);
    const double sx = static_cast<double>(image.width) / out_width;
    const double sy = static_cast<double>(image.height) / out_height;
    for (int y = 0; y < out_height; ++y)
        for (int x = 0; x < out_width; ++x)
            out.at(x, y) = bilinear_sample(image, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    return out;
}

inline void clamp01(Raster& image) {
    for (double& v : image.data) v = std::clamp(v, 0.0, 1.0);
}

inline Raster binarize(const Raster& image, double threshold = 0.5) {
    Raster out(image.width, image.height);
    for (std::size_t i = 0; i < image.data.size(); ++i)
        out.data[i] = image.data[i] >= threshold ? 1.0 : 0.0;
    return out;
}

inline void add_gaussian_noise(Raster& image, double sigma, std::mt19937_64& gen) {
    if (sigma <= 0.0) return;
    for (double& v : image.data) v += sigma * gaussian(gen);
}

}  // namespace skyreg
