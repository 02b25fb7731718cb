#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "skyreg/skyreg.hpp"

namespace testsupport {

using namespace skyreg;

inline Raster noise_raster(int w, int h, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Raster img(w, h);
    for (double& v : img.data) v = uniform_unit(gen);
    return img;
}

/// Best circular row shift s maximizing sum a(r, c) * b(r + s, c); if
/// b is a copy of a moved down by s0 rows, the argmax is s0. Returned in
/// [-rows/2, rows/2).
inline int best_circular_row_shift(const Raster& a, const Raster& b) {
    const int rows = a.height;
    const int cols = a.width;
    int best_shift = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < rows; ++s) {
        double score = 0.0;
        for (int r = 0; r < rows; ++r) {
            const int rb = (r + s) % rows;
            for (int c = 0; c < cols; ++c) score += a.at(c, r) * b.at(c, rb);
        }
        if (score > best_score) {
            best_score = score;
            best_shift = s;
        }
    }
    return best_shift < rows - rows / 2 ? best_shift : best_shift - rows;
}

/// Best column shift by normalized cross-correlation over the overlap,
/// searched in [-max_shift, max_shift]. Positive means b's content sits at
/// larger column indices than a's.
inline int best_column_shift(const Raster& a, const Raster& b, int max_shift) {
    const int rows = a.height;
    const int cols = a.width;
    int best_shift = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int s = -max_shift; s <= max_shift; ++s) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        long n = 0;
        for (int c = 0; c < cols; ++c) {
            const int cb = c + s;
            if (cb < 0 || cb >= cols) continue;
            for (int r = 0; r < rows; ++r) {
                const double va = a.at(c, r);
                const double vb = b.at(cb, r);
                sa += va;
                sb += vb;
                saa += va * va;
                sbb += vb * vb;
                sab += va * vb;
                ++n;
            }
        }
        if (n < rows * 4) continue;
        const double cov = sab / n - (sa / n) * (sb / n);
        const double var_a = saa / n - (sa / n) * (sa / n);
        const double var_b = sbb / n - (sb / n) * (sb / n);
        if (var_a <= 0.0 || var_b <= 0.0) continue;
        const double score = cov / std::sqrt(var_a * var_b);
        if (score > best_score) {
            best_score = score;
            best_shift = s;
        }
    }
    return best_shift;
}

/// Sub-pixel circular shift through a frequency-domain phase ramp; content
/// moves by (+dx, +dy), matching circular_shift for integer offsets.
inline Raster fractional_shift(const Raster& img, double dx, double dy) {
    ComplexSpectrum spec = dft2(img);
    const int w = spec.width;
    const int h = spec.height;
    for (int v = 0; v < h; ++v) {
        const int sv = v < h / 2 ? v : v - h;
        for (int u = 0; u < w; ++u) {
            const int su = u < w / 2 ? u : u - w;
            const double phase =
                -2.0 * std::numbers::pi * (su * dx / static_cast<double>(w) + sv * dy / static_cast<double>(h));
            spec.at(u, v) *= std::polar(1.0, phase);
        }
    }
    const ComplexSpectrum field = idft2(spec);
    Raster out(w, h);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = field.data[i].real();
    return out;
}

/// Analytic centred field with a pi-periodic angular profile and two radial
/// rings; `alpha` rotates the content, `stretch` > 1 enlarges it spatially.
/// Built about (size/2, size/2), matching the fftshift centre.
inline Raster polar_test_field(int size, double alpha = 0.0, double stretch = 1.0) {
    Raster img(size, size);
    const double cx = size / 2.0;
    const double cy = size / 2.0;
    const double r1 = 0.28 * size;
    const double s1 = 0.075 * size;
    const double r2 = 0.14 * size;
    const double s2 = 0.04 * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x - cx, y - cy) / stretch;
            const double phi = std::atan2(y - cy, x - cx) - alpha;
            const double angular = 0.55 + 0.3 * std::cos(2.0 * phi) + 0.25 * std::sin(4.0 * phi + 0.7) +
                                   0.2 * std::cos(6.0 * phi + 1.3);
            const double radial = std::exp(-(r - r1) * (r - r1) / (2.0 * s1 * s1)) +
                                  0.6 * std::exp(-(r - r2) * (r - r2) / (2.0 * s2 * s2));
            img.at(x, y) = angular * radial;
        }
    }
    return img;
}

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct RecoveryError {
    double rot_deg = 0.0;
    double scale_rel = 0.0;
    double trans_px = 0.0;
};

/// Compare a source-to-template alignment against the forward (template-to-
/// source) ground truth it should invert.
inline RecoveryError recovery_error(const Sim2& estimated_alignment, const Sim2& gt_forward) {
    const Sim2 forward = invert(estimated_alignment);
    RecoveryError err;
    err.rot_deg = std::abs(rad2deg(normalize_angle(forward.theta - gt_forward.theta)));
    err.scale_rel = std::abs(forward.s - gt_forward.s) / gt_forward.s;
    err.trans_px = std::hypot(forward.tx - gt_forward.tx, forward.ty - gt_forward.ty);
    return err;
}

}  // namespace testsupport
