#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skyreg {

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wrap an angle to (-pi, pi].
inline double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi)
        a += 2.0 * std::numbers::pi;
    else if (a > std::numbers::pi)
        a -= 2.0 * std::numbers::pi;
    return a;
}

/// 2-D similarity transform: uniform scale, rotation and translation.
/// The rotation acts counter-clockwise in the y-down raster frame, i.e.
/// theta = pi/2 maps (1,0) to (0,1). Angles are normalized to (-pi, pi]
/// at construction.
struct Sim2 {
    double s = 1.0;       // scale, > 0
    double theta = 0.0;   // radians in (-pi, pi]
    double tx = 0.0;      // translation, pixels
    double ty = 0.0;

    Sim2() = default;
    Sim2(double scale, double angle, double dx, double dy)
        : s(scale), theta(normalize_angle(angle)), tx(dx), ty(dy) {
        if (!std::isfinite(scale) || !(scale > 0.0))
            throw std::invalid_argument("Sim2: scale must be positive and finite");
        if (!std::isfinite(angle) || !std::isfinite(dx) || !std::isfinite(dy))
            throw std::invalid_argument("Sim2: parameters must be finite");
    }

    static Sim2 identity() { return {}; }
};

/// Matrix product of the homogeneous forms: apply b first, then a.
inline Sim2 compose(const Sim2& a, const Sim2& b) {
    const double c = std::cos(a.theta);
    const double sn = std::sin(a.theta);
    return Sim2(a.s * b.s, a.theta + b.theta,
                a.s * (c * b.tx - sn * b.ty) + a.tx,
                a.s * (sn * b.tx + c * b.ty) + a.ty);
}

inline Sim2 invert(const Sim2& a) {
    const double inv_s = 1.0 / a.s;
    const double c = std::cos(-a.theta);
    const double sn = std::sin(-a.theta);
    return Sim2(inv_s, -a.theta,
                -inv_s * (c * a.tx - sn * a.ty),
                -inv_s * (sn * a.tx + c * a.ty));
}

/// p' = s R(theta) (p - center) + center + t
inline PixelPoint apply_point(const Sim2& t, PixelPoint p, PixelPoint center = {0.0, 0.0}) {
    const double c = std::cos(t.theta);
    const double sn = std::sin(t.theta);
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    return {t.s * (c * dx - sn * dy) + center.x + t.tx,
            t.s * (sn * dx + c * dy) + center.y + t.ty};
}

}  // namespace skyreg
