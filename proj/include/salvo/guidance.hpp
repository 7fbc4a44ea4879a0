#pragma once

#include <stdexcept>

#include "salvo/engagement.hpp"

namespace salvo {

struct GuidanceParams {
    double nav_constant = 4.0;  // beta
    double gain = 0.3;          // eta, weight of the consensus controller

    void validate() const {
        if (!(nav_constant > 0.0))
            throw std::invalid_argument("GuidanceParams: navigation constant must be positive");
        if (gain < 0.0 || gain > 1.0)
            throw std::invalid_argument("GuidanceParams: gain must lie in [0, 1]");
    }
};

/// Proportional navigation tracking command; lateral channel only.
inline Command png_command(const RelativeGeometry& geom, double missile_speed,
                           double nav_constant) {
    return {nav_constant * geom.los_rate * missile_speed, 0.0};
}

/// Hybrid guidance: convex blend of tracking and consensus commands, then
/// componentwise clamp to the actuator limits.
inline Command blend_and_clamp(const Command& tracking, const Command& consensus, double gain,
                               const Constraints& constraints) {
    Command u{(1.0 - gain) * tracking.a_l + gain * consensus.a_l,
              (1.0 - gain) * tracking.a_v + gain * consensus.a_v};
    u.a_l = clamp_magnitude(u.a_l, constraints.a_lmax);
    u.a_v = clamp_magnitude(u.a_v, constraints.a_vmax);
    return u;
}

}  // namespace salvo
