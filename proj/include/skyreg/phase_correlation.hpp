#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "skyreg/fft.hpp"

namespace skyreg {

/// Real correlation response grid. `centered` marks that zero shift sits at
/// bin (width/2, height/2) rather than at (0,0).
struct CorrelationSurface {
    int width = 0;
    int height = 0;
    std::vector<double> data;
    bool centered = false;

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    /// Zero-centred shift encoded by a raw bin index.
    double shift_x(int ix) const {
        if (centered) return ix - width / 2;
        return ix < width - width / 2 ? ix : ix - width;
    }
    double shift_y(int iy) const {
        if (centered) return iy - height / 2;
        return iy < height - height / 2 ? iy : iy - height;
    }
};

/// Peak location as a signed, zero-centred shift in bins. Confidence is the
/// peak value over (surface mean + 3 sigma), clamped at zero.
struct PeakEstimate {
    double dx = 0.0;
    double dy = 0.0;
    double confidence = 0.0;
};

/// Jacobians of the soft-argmax estimate, taken with the window anchor held
/// fixed (the anchor itself is a discrete function of the surface). Window
/// entries are row-major over the (2r+1)^2 neighbourhood around the anchor.
struct SoftArgmaxGradients {
    int window_radius = 0;
    int anchor_x = 0;  // raw bin index of the window centre
    int anchor_y = 0;
    std::vector<double> d_dx_d_value;
    std::vector<double> d_dy_d_value;
    double d_dx_d_temperature = 0.0;
    double d_dy_d_temperature = 0.0;
};

/// Normalized cross-power spectrum, conj(Fa) * Fb / (|conj(Fa) * Fb| + eps).
/// Every output bin has modulus at most 1. With this orientation the inverse
/// transform peaks at the shift of b relative to a.
inline ComplexSpectrum cross_power_spectrum(const ComplexSpectrum& fa, const ComplexSpectrum& fb,
                                            double eps = 1e-8) {
    if (fa.width != fb.width || fa.height != fb.height)
        throw std::invalid_argument("cross_power_spectrum: dimension mismatch");
    if (!(eps > 0.0)) throw std::invalid_argument("cross_power_spectrum: eps must be positive");
    ComplexSpectrum out;
    out.width = fa.width;
    out.height = fa.height;
    out.data.resize(fa.data.size());
    for (std::size_t i = 0; i < fa.data.size(); ++i) {
        const std::complex<double> c = std::conj(fa.data[i]) * fb.data[i];
        out.data[i] = c / (std::abs(c) + eps);
    }
    return out;
}

/// Phase correlation of two pre-transformed spectra; see the raster overload.
inline CorrelationSurface correlate(const ComplexSpectrum& fa, const ComplexSpectrum& fb,
                                    double eps = 1e-8) {
    const ComplexSpectrum field = idft2(cross_power_spectrum(fa, fb, eps));
    CorrelationSurface surf;
    surf.width = fa.width;
    surf.height = fa.height;
    surf.data.resize(field.data.size());
    surf.centered = true;
    const int hw = fa.width / 2;
    const int hh = fa.height / 2;
    for (int y = 0; y < fa.height; ++y)
        for (int x = 0; x < fa.width; ++x)
            surf.at(x, y) = field.at((x + hw) % fa.width, (y + hh) % fa.height).real();
    return surf;
}

/// Phase correlation of two equal-sized rasters. The returned surface is
/// centred: for b = circular_shift(a, dx, dy) the peak sits at the bin whose
/// zero-centred shift is (dx, dy).
inline CorrelationSurface correlate(const Raster& a, const Raster& b, double eps = 1e-8) {
    if (!a.same_dims(b)) throw std::invalid_argument("correlate: dimension mismatch");
    return correlate(dft2(a), dft2(b), eps);
}

namespace detail {

inline double peak_confidence(const CorrelationSurface& surf, double peak_value) {
    double mean = 0.0;
    for (double v : surf.data) mean += v;
    mean /= static_cast<double>(surf.data.size());
    double var = 0.0;
    for (double v : surf.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(surf.data.size());
    const double denom = mean + 3.0 * std::sqrt(var);
    if (!(denom > 1e-12)) return 0.0;
    return std::max(0.0, peak_value / denom);
}

struct WindowAnchor {
    int ix = 0;
    int iy = 0;
    double max_value = 0.0;
};

/// Window centre for the soft-argmax: the rounded centroid (in shift
/// coordinates) of all bins tying the global maximum. With a unique max this
/// is the argmax bin; with symmetric ties the window stays symmetric.
inline WindowAnchor softargmax_anchor(const CorrelationSurface& surf) {
    double max_value = -std::numeric_limits<double>::infinity();
    for (double v : surf.data) max_value = std::max(max_value, v);
    double sx = 0.0, sy = 0.0;
    long count = 0;
    for (int iy = 0; iy < surf.height; ++iy) {
        for (int ix = 0; ix < surf.width; ++ix) {
            if (surf.at(ix, iy) == max_value) {
                sx += surf.shift_x(ix);
                sy += surf.shift_y(iy);
                ++count;
            }
        }
    }
    const long ax = std::lround(sx / count);
    const long ay = std::lround(sy / count);
    const auto to_raw = [](long shift, int n, bool centered) {
        long raw = centered ? shift + n / 2 : (shift < 0 ? shift + n : shift);
        return static_cast<int>(std::clamp(raw, 0L, static_cast<long>(n - 1)));
    };
    return {to_raw(ax, surf.width, surf.centered), to_raw(ay, surf.height, surf.centered), max_value};
}

inline int wrap_index(int v, int n) {
    v %= n;
    return v < 0 ? v + n : v;
}

}  // namespace detail

/// Integer-bin maximum. Ties go to the smallest row-major index.
inline PeakEstimate peak_argmax(const CorrelationSurface& surf) {
    if (surf.data.empty()) throw std::invalid_argument("peak_argmax: empty surface");
    std::size_t best = 0;
    for (std::size_t i = 1; i < surf.data.size(); ++i)
        if (surf.data[i] > surf.data[best]) best = i;
    const int ix = static_cast<int>(best % static_cast<std::size_t>(surf.width));
    const int iy = static_cast<int>(best / static_cast<std::size_t>(surf.width));
    return {surf.shift_x(ix), surf.shift_y(iy), detail::peak_confidence(surf, surf.data[best])};
}

/// Soft-argmax over a fixed (2r+1)^2 window anchored at the given raw bin.
/// Window values are read circularly; window coordinates unwrap around the
/// anchor, so the estimate can step past the nominal shift range.
inline PeakEstimate peak_softargmax_at(const CorrelationSurface& surf, int anchor_x, int anchor_y,
                                       double temperature, int window_radius = 8) {
    if (surf.data.empty()) throw std::invalid_argument("peak_softargmax: empty surface");
    if (!std::isfinite(temperature) || !(temperature > 0.0))
        throw std::invalid_argument("peak_softargmax: temperature must be positive");
    if (window_radius < 1) throw std::invalid_argument("peak_softargmax: window_radius must be at least 1");
    if (anchor_x < 0 || anchor_y < 0 || anchor_x >= surf.width || anchor_y >= surf.height)
        throw std::invalid_argument("peak_softargmax: anchor outside the surface");
    const int r = std::min(window_radius, (std::min(surf.width, surf.height) - 1) / 2);
    const double base_x = surf.shift_x(anchor_x);
    const double base_y = surf.shift_y(anchor_y);
    double window_max = -std::numeric_limits<double>::infinity();
    for (int oy = -r; oy <= r; ++oy) {
        const int iy = detail::wrap_index(anchor_y + oy, surf.height);
        for (int ox = -r; ox <= r; ++ox)
            window_max = std::max(window_max, surf.at(detail::wrap_index(anchor_x + ox, surf.width), iy));
    }
    double z = 0.0, ex = 0.0, ey = 0.0;
    for (int oy = -r; oy <= r; ++oy) {
        const int iy = detail::wrap_index(anchor_y + oy, surf.height);
        for (int ox = -r; ox <= r; ++ox) {
            const int ix = detail::wrap_index(anchor_x + ox, surf.width);
            const double p = std::exp((surf.at(ix, iy) - window_max) / temperature);
            z += p;
            ex += p * (base_x + ox);
            ey += p * (base_y + oy);
        }
    }
    double global_max = -std::numeric_limits<double>::infinity();
    for (double v : surf.data) global_max = std::max(global_max, v);
    return {ex / z, ey / z, detail::peak_confidence(surf, global_max)};
}

/// Differentiable peak estimate: softmax(window / temperature) weights the
/// bin shifts. Small temperatures approach peak_argmax; large ones flatten
/// toward the window centroid.
inline PeakEstimate peak_softargmax(const CorrelationSurface& surf, double temperature,
                                    int window_radius = 8) {
    if (surf.data.empty()) throw std::invalid_argument("peak_softargmax: empty surface");
    const detail::WindowAnchor anchor = detail::softargmax_anchor(surf);
    return peak_softargmax_at(surf, anchor.ix, anchor.iy, temperature, window_radius);
}

/// Closed-form softmax Jacobians of the soft-argmax estimate with respect to
/// the in-window surface values and the temperature.
inline SoftArgmaxGradients softargmax_gradients(const CorrelationSurface& surf, double temperature,
                                                int window_radius = 8) {
    if (surf.data.empty()) throw std::invalid_argument("softargmax_gradients: empty surface");
    if (!std::isfinite(temperature) || !(temperature > 0.0))
        throw std::invalid_argument("softargmax_gradients: temperature must be positive");
    if (window_radius < 1)
        throw std::invalid_argument("softargmax_gradients: window_radius must be at least 1");
    const detail::WindowAnchor anchor = detail::softargmax_anchor(surf);
    const int r = std::min(window_radius, (std::min(surf.width, surf.height) - 1) / 2);
    const int side = 2 * r + 1;
    const std::size_t count = static_cast<std::size_t>(side) * side;
    std::vector<double> values(count), cx(count), cy(count);
    const double base_x = surf.shift_x(anchor.ix);
    const double base_y = surf.shift_y(anchor.iy);
    double window_max = -std::numeric_limits<double>::infinity();
    std::size_t j = 0;
    for (int oy = -r; oy <= r; ++oy) {
        const int iy = detail::wrap_index(anchor.iy + oy, surf.height);
        for (int ox = -r; ox <= r; ++ox, ++j) {
            values[j] = surf.at(detail::wrap_index(anchor.ix + ox, surf.width), iy);
            cx[j] = base_x + ox;
            cy[j] = base_y + oy;
            window_max = std::max(window_max, values[j]);
        }
    }
    std::vector<double> p(count);
    double z = 0.0;
    for (j = 0; j < count; ++j) {
        p[j] = std::exp((values[j] - window_max) / temperature);
        z += p[j];
    }
    double ex = 0.0, ey = 0.0;
    for (j = 0; j < count; ++j) {
        p[j] /= z;
        ex += p[j] * cx[j];
        ey += p[j] * cy[j];
    }
    SoftArgmaxGradients g;
    g.window_radius = r;
    g.anchor_x = anchor.ix;
    g.anchor_y = anchor.iy;
    g.d_dx_d_value.resize(count);
    g.d_dy_d_value.resize(count);
    // d e / d v_j = p_j (c_j - e) / tau;  d e / d tau = -cov_p(v, c) / tau^2
    double ev = 0.0, evx = 0.0, evy = 0.0;
    for (j = 0; j < count; ++j) {
        g.d_dx_d_value[j] = p[j] * (cx[j] - ex) / temperature;
        g.d_dy_d_value[j] = p[j] * (cy[j] - ey) / temperature;
        const double centred = values[j] - window_max;
        ev += p[j] * centred;
        evx += p[j] * centred * cx[j];
        evy += p[j] * centred * cy[j];
    }
    g.d_dx_d_temperature = -(evx - ev * ex) / (temperature * temperature);
    g.d_dy_d_temperature = -(evy - ev * ey) / (temperature * temperature);
    return g;
}

struct LabeledSurface {
    CorrelationSurface surface;
    double true_dx = 0.0;
    double true_dy = 0.0;
};

/// Grid search for the temperature minimizing the mean soft-argmax shift
/// error. Errors within 1e-12 bins count as ties, which break toward the
/// smaller temperature.
inline double calibrate_temperature(std::span<const LabeledSurface> pairs,
                                    std::span<const double> tau_grid, int window_radius = 8) {
    if (pairs.empty() || tau_grid.empty())
        throw std::invalid_argument("calibrate_temperature: empty input");
    std::vector<double> grid(tau_grid.begin(), tau_grid.end());
    std::sort(grid.begin(), grid.end());
    double best_tau = grid.front();
    double best_err = std::numeric_limits<double>::infinity();
    for (double tau : grid) {
        double err = 0.0;
        for (const LabeledSurface& pair : pairs) {
            const PeakEstimate est = peak_softargmax(pair.surface, tau, window_radius);
            err += std::hypot(est.dx - pair.true_dx, est.dy - pair.true_dy);
        }
        err /= static_cast<double>(pairs.size());
        if (err + 1e-12 < best_err) {
            best_err = err;
            best_tau = tau;
        }
    }
    return best_tau;
}

}  // namespace skyreg
