#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace salvo {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Standard gravity, used to convert overload limits (g units) to m/s^2.
inline constexpr double kGravity = 9.81;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double x) {
    double w = std::remainder(x, kTwoPi);
    if (w <= -kPi)
        w += kTwoPi;
    return w;
}

inline double clamp_magnitude(double v, double limit) {
    return std::clamp(v, -limit, limit);
}

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace salvo
