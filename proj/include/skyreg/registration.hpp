#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "skyreg/fft.hpp"
#include "skyreg/logpolar.hpp"
#include "skyreg/phase_correlation.hpp"
#include "skyreg/raster.hpp"
#include "skyreg/sim2.hpp"
#include "skyreg/warp.hpp"

namespace skyreg {

enum class FeatureMode {
    identity,
    gradient_magnitude,
};

struct PipelineConfig {
    int working_size = 256;        // square working frame, power of two, >= 64
    double temperature = 0.1;      // soft-argmax temperature as a fraction of surface dynamic range
    int window_radius = 8;
    // Gradient features by default: raw intensities leave the spectral stage
    // at the mercy of the DC lump, whose grid-sampling ripple can lock the
    // log-polar correlation onto 0 or 90 degrees on low-texture scenes.
    FeatureMode feature_mode = FeatureMode::gradient_magnitude;
    bool highpass_enabled = true;
    LogPolarConfig logpolar = LogPolarConfig::for_field(256);
    double eps = 1e-8;
    double min_confidence = 5.0;   // estimates below this are not trusted by callers
};

/// Result of a full registration. `transform` maps source pixels onto the
/// template frame: warp(source, transform) aligns with the template.
struct RegistrationEstimate {
    Sim2 transform;
    double rot_confidence = 0.0;
    double trans_confidence = 0.0;
    bool ambiguity_resolved_by_flip = false;
    double elapsed_ms = 0.0;
};

struct RotScaleEstimate {
    RotScale rot_scale;
    double confidence = 0.0;
};

struct AmbiguityResolution {
    RotScale rot_scale;
    PeakEstimate translation;
    bool flipped = false;
};

namespace detail {

/// 3x3 binomial smoothing with clamped borders.
inline Raster binomial_smooth(const Raster& image) {
    const auto clamped = [&image](int x, int y) {
        x = std::clamp(x, 0, image.width - 1);
        y = std::clamp(y, 0, image.height - 1);
        return image.at(x, y);
    };
    Raster out(image.width, image.height);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            out.at(x, y) = (4.0 * clamped(x, y) +
                            2.0 * (clamped(x - 1, y) + clamped(x + 1, y) + clamped(x, y - 1) +
                                   clamped(x, y + 1)) +
                            clamped(x - 1, y - 1) + clamped(x + 1, y - 1) + clamped(x - 1, y + 1) +
                            clamped(x + 1, y + 1)) /
                           16.0;
        }
    }
    return out;
}

}  // namespace detail

/// Pluggable stand-in for a learned feature extractor. Gradient mode is a
/// normalized Sobel magnitude over a lightly smoothed image; without the
/// smoothing, pixel noise reaches the same gradient magnitude as real edges.
inline Raster feature_extract(const Raster& image, FeatureMode mode) {
    if (image.empty()) throw std::invalid_argument("feature_extract: empty raster");
    if (mode == FeatureMode::identity) return image;
    const Raster smooth = detail::binomial_smooth(image);
    const auto clamped = [&smooth](int x, int y) {
        x = std::clamp(x, 0, smooth.width - 1);
        y = std::clamp(y, 0, smooth.height - 1);
        return smooth.at(x, y);
    };
    Raster out(image.width, image.height);
    double peak = 0.0;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double gx = (clamped(x + 1, y - 1) + 2.0 * clamped(x + 1, y) + clamped(x + 1, y + 1)) -
                              (clamped(x - 1, y - 1) + 2.0 * clamped(x - 1, y) + clamped(x - 1, y + 1));
            const double gy = (clamped(x - 1, y + 1) + 2.0 * clamped(x, y + 1) + clamped(x + 1, y + 1)) -
                              (clamped(x - 1, y - 1) + 2.0 * clamped(x, y - 1) + clamped(x + 1, y - 1));
            const double g = std::sqrt(gx * gx + gy * gy);
            out.at(x, y) = g;
            peak = std::max(peak, g);
        }
    }
    if (peak > 0.0)
        for (double& v : out.data) v /= peak;
    return out;
}

namespace detail {

inline double surface_temperature(const CorrelationSurface& surf, double fraction) {
    double lo = surf.data.front();
    double hi = lo;
    for (double v : surf.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;
    return fraction * (range > 1e-12 ? range : 1.0);
}

}  // namespace detail

/// Rotation/scale signature of one image: apodize -> FFT -> centre ->
/// log magnitude -> (optional) high-pass -> log-polar resample.
inline Raster logpolar_signature(const Raster& image, const PipelineConfig& cfg) {
    const SpectralConfig spectral{1.0, cfg.highpass_enabled};
    Raster mag = fftshift(log_magnitude(dft2(apodize(image)), spectral));
    if (cfg.highpass_enabled) mag = highpass(mag);
    const LogPolarConfig lp =
        LogPolarConfig::for_field(image.width, cfg.logpolar.angular_bins, cfg.logpolar.radial_bins);
    return logpolar_resample(mag, lp);
}

namespace detail {

/// Equalize a log-polar signature before correlation. Each column (one
/// radius) loses its mean and is scaled toward unit variance, so the shared
/// radial envelope of the two spectra cannot outvote the angular content;
/// the non-periodic radial axis is Hann-tapered against wrap-around.
inline void condition_logpolar(Raster& lp) {
    const int rows = lp.height;
    const int cols = lp.width;
    std::vector<double> sd(static_cast<std::size_t>(cols), 0.0);
    for (int c = 0; c < cols; ++c) {
        double mean = 0.0;
        for (int r = 0; r < rows; ++r) mean += lp.at(c, r);
        mean /= rows;
        double var = 0.0;
        for (int r = 0; r < rows; ++r) {
            lp.at(c, r) -= mean;
            var += lp.at(c, r) * lp.at(c, r);
        }
        sd[static_cast<std::size_t>(c)] = std::sqrt(var / rows);
    }
    double mean_sd = 0.0;
    for (double s : sd) mean_sd += s;
    mean_sd /= cols;
    if (!(mean_sd > 0.0)) return;
    for (int c = 0; c < cols; ++c) {
        const double taper = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * c / (cols - 1)));
        const double w = taper / (sd[static_cast<std::size_t>(c)] + 0.1 * mean_sd);
        for (int r = 0; r < rows; ++r) lp.at(c, r) *= w;
    }
}

/// Mean modulus of the per-bin cross power, for magnitude-aware
/// regularization of the normalization.
inline double cross_magnitude_mean(const ComplexSpectrum& fa, const ComplexSpectrum& fb) {
    double sum = 0.0;
    for (std::size_t i = 0; i < fa.data.size(); ++i) sum += std::abs(fa.data[i]) * std::abs(fb.data[i]);
    return sum / static_cast<double>(fa.data.size());
}

}  // namespace detail

/// Rotation and scale of the source relative to the template: feature
/// extraction feeds the spectral chain, and the correlation of the two
/// log-polar signatures locates the (rotation, scale) offset. The angle is
/// in the half-range (-pi/2, pi/2]; the half-turn ambiguity is resolved by
/// resolve_ambiguity.
inline RotScaleEstimate estimate_rot_scale(const Raster& templ, const Raster& source,
                                           const PipelineConfig& cfg) {
    if (!templ.same_dims(source)) throw std::invalid_argument("estimate_rot_scale: dimension mismatch");
    if (templ.width != templ.height)
        throw std::invalid_argument("estimate_rot_scale: inputs must be square");
    Raster lp_t = logpolar_signature(feature_extract(templ, cfg.feature_mode), cfg);
    Raster lp_s = logpolar_signature(feature_extract(source, cfg.feature_mode), cfg);
    detail::condition_logpolar(lp_t);
    detail::condition_logpolar(lp_s);
    const ComplexSpectrum fa = dft2(lp_t);
    const ComplexSpectrum fb = dft2(lp_s);
    // Down-weight weak, noise-dominated bins in the normalization instead of
    // giving every bin a unit vote.
    const double eps_eff = std::max(cfg.eps, 0.3 * detail::cross_magnitude_mean(fa, fb));
    const CorrelationSurface surf = correlate(fa, fb, eps_eff);
    const PeakEstimate peak =
        peak_softargmax(surf, detail::surface_temperature(surf, cfg.temperature), cfg.window_radius);
    const LogPolarConfig lp =
        LogPolarConfig::for_field(templ.width, cfg.logpolar.angular_bins, cfg.logpolar.radial_bins);
    return {delta_to_rot_scale(peak.dy, peak.dx, lp), peak.confidence};
}

/// Translation of an already de-rotated/de-scaled source against the
/// template, in working-frame pixels.
inline PeakEstimate estimate_translation(const Raster& templ, const Raster& aligned_source,
                                         const PipelineConfig& cfg) {
    if (!templ.same_dims(aligned_source))
        throw std::invalid_argument("estimate_translation: dimension mismatch");
    const Raster ft = feature_extract(templ, cfg.feature_mode);
    const Raster fs = feature_extract(aligned_source, cfg.feature_mode);
    const CorrelationSurface surf = correlate(ft, fs, cfg.eps);
    return peak_softargmax(surf, detail::surface_temperature(surf, cfg.temperature), cfg.window_radius);
}

/// Settle the theta vs theta+pi ambiguity left by the magnitude spectrum's
/// point symmetry: de-warp the source with both candidates and keep the one
/// whose translation correlation is strictly more confident. Ties keep the
/// unflipped candidate.
inline AmbiguityResolution resolve_ambiguity(const Raster& templ, const Raster& source,
                                             const RotScale& candidate, const PipelineConfig& cfg) {
    const auto dewarp = [&](double theta) {
        return warp(source, Sim2(1.0 / candidate.s, -theta, 0.0, 0.0));
    };
    const PeakEstimate straight = estimate_translation(templ, dewarp(candidate.theta), cfg);
    const PeakEstimate flipped =
        estimate_translation(templ, dewarp(candidate.theta + std::numbers::pi), cfg);
    if (flipped.confidence > straight.confidence + 1e-9)
        return {RotScale{normalize_angle(candidate.theta + std::numbers::pi), candidate.s}, flipped, true};
    return {candidate, straight, false};
}

/// Full pipeline: feature extraction, rotation/scale from the log-polar
/// spectra, flip resolution, translation on the de-warped source, assembled
/// into the aligning transform. Degenerate inputs come back with near-zero
/// confidences rather than an exception.
inline RegistrationEstimate register_images(const Raster& templ, const Raster& source,
                                            const PipelineConfig& cfg = {}) {
    if (templ.empty() || source.empty()) throw std::invalid_argument("register_images: empty input");
    if (!is_power_of_two(cfg.working_size) || cfg.working_size < 64)
        throw std::invalid_argument("register_images: working_size must be a power of two >= 64");
    const auto t0 = std::chrono::steady_clock::now();
    const int ws = cfg.working_size;
    const Raster rt =
        (templ.width == ws && templ.height == ws) ? templ : resample_bilinear(templ, ws, ws);
    const Raster rs =
        (source.width == ws && source.height == ws) ? source : resample_bilinear(source, ws, ws);
    const RotScaleEstimate rot = estimate_rot_scale(rt, rs, cfg);
    const AmbiguityResolution res = resolve_ambiguity(rt, rs, rot.rot_scale, cfg);
    // Undo rotation/scale about the centre, then the residual shift.
    const Sim2 align(1.0 / res.rot_scale.s, -res.rot_scale.theta, -res.translation.dx,
                     -res.translation.dy);
    // Convert back to native pixel units (both frames were resampled to ws).
    const Sim2 native(align.s * (static_cast<double>(templ.width) / ws) * (static_cast<double>(ws) / source.width),
                      align.theta, align.tx * static_cast<double>(templ.width) / ws,
                      align.ty * static_cast<double>(templ.height) / ws);
    RegistrationEstimate est;
    est.transform = native;
    est.rot_confidence = rot.confidence;
    est.trans_confidence = res.translation.confidence;
    est.ambiguity_resolved_by_flip = res.flipped;
    est.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return est;
}

}  // namespace skyreg
