#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "skyreg/raster.hpp"
#include "skyreg/sim2.hpp"

namespace skyreg {

/// Discretization of the log-polar resampling. Rows cover angles [0, pi)
/// (the magnitude spectrum is point-symmetric, so the half-plane carries all
/// information); columns cover radii 1..max_radius on a log scale.
struct LogPolarConfig {
    int angular_bins = 256;   // rows
    int radial_bins = 256;    // columns
    double max_radius = 128.0;
    double log_base = 1.0;    // derived: radial_bins-1 bins span radius 1..max_radius

    static LogPolarConfig for_field(int field_size, int angular = 256, int radial = 256) {
        if (angular < 8 || radial < 8)
            throw std::invalid_argument("LogPolarConfig: need at least 8 bins per axis");
        if (field_size < 4) throw std::invalid_argument("LogPolarConfig: field too small");
        LogPolarConfig cfg;
        cfg.angular_bins = angular;
        cfg.radial_bins = radial;
        cfg.max_radius = field_size / 2.0;
        cfg.log_base = std::exp(std::log(cfg.max_radius) / (radial - 1));
        if (!(cfg.log_base > 1.0)) throw std::invalid_argument("LogPolarConfig: degenerate log base");
        return cfg;
    }
};

struct RotScale {
    double theta = 0.0;  // radians
    double s = 1.0;      // scale, > 0
};

/// Resample a centred (fftshifted) square field onto (angle, log-radius)
/// axes about the zero-frequency bin (w/2, h/2). Row r reads angle
/// r*pi/angular_bins, column c reads radius log_base^c; samples outside the
/// field read 0.
inline Raster logpolar_resample(const Raster& mag, const LogPolarConfig& cfg) {
    if (mag.width != mag.height) throw std::invalid_argument("logpolar_resample: field must be square");
    if (mag.empty()) throw std::invalid_argument("logpolar_resample: empty field");
    const double cx = mag.width / 2.0;
    const double cy = mag.height / 2.0;
    std::vector<double> radii(static_cast<std::size_t>(cfg.radial_bins));
    for (int c = 0; c < cfg.radial_bins; ++c)
        radii[static_cast<std::size_t>(c)] = std::pow(cfg.log_base, static_cast<double>(c));
    Raster out(cfg.radial_bins, cfg.angular_bins);
    for (int r = 0; r < cfg.angular_bins; ++r) {
        const double phi = r * std::numbers::pi / cfg.angular_bins;
        const double cphi = std::cos(phi);
        const double sphi = std::sin(phi);
        for (int c = 0; c < cfg.radial_bins; ++c) {
            const double radius = radii[static_cast<std::size_t>(c)];
            out.at(c, r) = bilinear_sample(mag, cx + radius * cphi, cy + radius * sphi);
        }
    }
    return out;
}

/// Map a correlation peak offset between two log-polar fields back to
/// rotation and scale. A row shift of one bin is pi/angular_bins radians.
/// Scale uses the frequency-domain reciprocal: a source that is larger than
/// the template shifts its spectrum toward DC, so s = log_base^(-dcol) and
/// s > 1 means the source must be shrunk to match the template. The angle is
/// canonicalized to (-pi/2, pi/2]; the half-turn ambiguity is resolved
/// downstream.
inline RotScale delta_to_rot_scale(double drow, double dcol, const LogPolarConfig& cfg) {
    if (!std::isfinite(drow) || !std::isfinite(dcol))
        throw std::invalid_argument("delta_to_rot_scale: offsets must be finite");
    double theta = drow * std::numbers::pi / cfg.angular_bins;
    while (theta > std::numbers::pi / 2) theta -= std::numbers::pi;
    while (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
    return {theta, std::pow(cfg.log_base, -dcol)};
}

}  // namespace skyreg
