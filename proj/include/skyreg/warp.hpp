#pragma once

#include <cmath>
#include <stdexcept>

#include "skyreg/raster.hpp"
#include "skyreg/sim2.hpp"

namespace skyreg {

/// Apply a similarity transform to an image by inverse mapping with bilinear
/// interpolation. The transform acts about the image centre ((w-1)/2, (h-1)/2);
/// input and output canvases are centre-aligned, so an impulse at the centre
/// lands at centre + t. Samples pulled from outside the source read as 0.
inline Raster warp(const Raster& image, const Sim2& t, int out_width, int out_height) {
    if (image.empty()) throw std::invalid_argument("warp: empty raster");
    if (out_width <= 0 || out_height <= 0)
        throw std::invalid_argument("warp: output dimensions must be positive");
    const double cin_x = (image.width - 1) * 0.5;
    const double cin_y = (image.height - 1) * 0.5;
    const double cout_x = (out_width - 1) * 0.5;
    const double cout_y = (out_height - 1) * 0.5;
    const double c = std::cos(t.theta);
    const double sn = std::sin(t.theta);
    const double inv_s = 1.0 / t.s;
    Raster out(out_width, out_height);
    for (int y = 0; y < out_height; ++y) {
        const double py = y - cout_y - t.ty;
        for (int x = 0; x < out_width; ++x) {
            const double px = x - cout_x - t.tx;
            const double qx = inv_s * (c * px + sn * py) + cin_x;
            const double qy = inv_s * (-sn * px + c * py) + cin_y;
            out.at(x, y) = bilinear_sample(image, qx, qy);
        }
    }
    return out;
}

inline Raster warp(const Raster& image, const Sim2& t) {
    return warp(image, t, image.width, image.height);
}

}  // namespace skyreg
