#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "salvo/math.hpp"

namespace salvo {

/// Actuator and airframe limits shared by all missiles.
struct Constraints {
    double a_lmax = 50.0 * kGravity;  // lateral acceleration limit
    double a_vmax = 5.0 * kGravity;   // thrust acceleration limit
    double v_max = 900.0;
    double v_min = 350.0;

    void validate() const {
        if (!(a_lmax > 0.0) || !(a_vmax > 0.0))
            throw std::invalid_argument("Constraints: acceleration limits must be positive");
        if (!(v_max > v_min) || !(v_min > 0.0))
            throw std::invalid_argument("Constraints: need v_max > v_min > 0");
    }
};

/// Acceleration command: lateral (perpendicular to velocity) and thrust (along it).
struct Command {
    double a_l = 0.0;
    double a_v = 0.0;

    bool finite() const { return std::isfinite(a_l) && std::isfinite(a_v); }
};

struct MissileState {
    Vec2 position{0.0, 0.0};
    double velocity = 0.0;           // m/s, clamped to [v_min, v_max]
    double flight_path_angle = 0.0;  // rad, wrapped to (-pi, pi]
    bool active = true;
    double terminated_at = std::numeric_limits<double>::quiet_NaN();

    Vec2 velocity_vector() const {
        return velocity * Vec2{std::cos(flight_path_angle), std::sin(flight_path_angle)};
    }
};

/// Lateral-acceleration program of the target, a_T(t) = amplitude * sin(omega*t + phase).
struct TargetManeuver {
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;

    double operator()(double t) const {
        return amplitude == 0.0 ? 0.0 : amplitude * std::sin(omega * t + phase);
    }
};

struct TargetState {
    Vec2 position{0.0, 0.0};
    double velocity = 0.0;  // constant over an episode
    double flight_path_angle = 0.0;
    TargetManeuver maneuver{};

    Vec2 velocity_vector() const {
        return velocity * Vec2{std::cos(flight_path_angle), std::sin(flight_path_angle)};
    }
};

struct RelativeGeometry {
    double range = 0.0;           // r_i
    double range_rate = 0.0;      // dr_i/dt
    double los_angle = 0.0;       // Xi_mi
    double los_rate = 0.0;        // dXi_mi/dt
    double heading_angle = 0.0;   // delta_mi = alpha_mi - Xi_mi
    double target_heading = 0.0;  // delta_Ti = alpha_T - Xi_mi
};

inline RelativeGeometry relative_geometry(const MissileState& missile, const TargetState& target) {
    const Vec2 rel = target.position - missile.position;
    const double r = rel.norm();
    if (r == 0.0)
        throw std::domain_error("relative_geometry: coincident missile and target positions");

    RelativeGeometry g;
    g.range = r;
    g.los_angle = std::atan2(rel.y(), rel.x());
    g.heading_angle = wrap_angle(missile.flight_path_angle - g.los_angle);
    g.target_heading = wrap_angle(target.flight_path_angle - g.los_angle);
    g.range_rate = -missile.velocity * std::cos(g.heading_angle) + target.velocity * std::cos(g.target_heading);
    g.los_rate = (-missile.velocity * std::sin(g.heading_angle) + target.velocity * std::sin(g.target_heading)) / r;
    return g;
}

/// Estimated remaining flight time, -r/rdot. Opening geometry (rdot >= 0)
/// returns +inf so consensus errors saturate instead of flipping sign.
inline double time_to_go(const RelativeGeometry& geom) {
    if (geom.range_rate < 0.0)
        return -geom.range / geom.range_rate;
    return std::numeric_limits<double>::infinity();
}

/// One explicit-Euler step of missile and target from the pre-step snapshot.
/// `time` is the episode time at the start of the step (drives the target maneuver).
inline std::pair<MissileState, TargetState> step_dynamics(const MissileState& missile,
                                                          const TargetState& target,
                                                          const Command& command, double tau,
                                                          double time,
                                                          const Constraints& constraints) {
    if (!command.finite())
        throw std::invalid_argument("step_dynamics: non-finite command");
    if (!(tau > 0.0))
        throw std::invalid_argument("step_dynamics: tau must be positive");

    MissileState m = missile;
    m.position += missile.velocity_vector() * tau;
    m.flight_path_angle = wrap_angle(missile.flight_path_angle + command.a_l / missile.velocity * tau);
    m.velocity = std::clamp(missile.velocity + command.a_v * tau, constraints.v_min, constraints.v_max);

    TargetState t = target;
    if (target.velocity != 0.0) {
        t.position += target.velocity_vector() * tau;
        t.flight_path_angle = wrap_angle(target.flight_path_angle + target.maneuver(time) / target.velocity * tau);
    }
    return {m, t};
}

struct TerminationParams {
    double hit_threshold = 0.5;     // m
    double near_miss_window = 50.0; // m; pass-bys farther than this stay ongoing
};

/// Per-missile terminal detector, fed the post-step relative position
/// (target - missile) once per simulation step. Terminal when the range drops
/// below the hit threshold, or when the range rate flips from negative to
/// non-negative inside the near-miss window. Miss distance is refined by
/// closest-approach interpolation of straight-line relative motion within the
/// bracketing step.
class TerminalDetector {
public:
    explicit TerminalDetector(TerminationParams params = {}) : params_(params) {}

    struct Terminal {
        double miss_distance = 0.0;
        double impact_time = 0.0;
    };

    std::optional<Terminal> update(const Vec2& relative_position, double time) {
        const double r = relative_position.norm();
        if (!has_prev_) {
            has_prev_ = true;
            prev_rel_ = relative_position;
            prev_range_ = r;
            prev_time_ = time;
            min_range_ = r;
            if (r < params_.hit_threshold)
                return Terminal{r, time};
            return std::nullopt;
        }

        const Vec2 d = relative_position - prev_rel_;
        double s = 0.0;
        const double dd = d.squaredNorm();
        if (dd > 0.0)
            s = std::clamp(-prev_rel_.dot(d) / dd, 0.0, 1.0);
        const double segment_min = (prev_rel_ + s * d).norm();
        const double segment_time = prev_time_ + s * (time - prev_time_);
        min_range_ = std::min(min_range_, segment_min);

        const bool hit = segment_min < params_.hit_threshold;
        // Interior closest approach means the flip happened within this step;
        // a flip at the step boundary shows as approach followed by recession.
        const bool flipped = (s > 0.0 && s < 1.0) || (approaching_ && r >= prev_range_);
        const bool passed = flipped && segment_min < params_.near_miss_window;

        approaching_ = r < prev_range_;
        prev_rel_ = relative_position;
        prev_range_ = r;
        prev_time_ = time;

        if (hit || passed)
            return Terminal{segment_min, segment_time};
        return std::nullopt;
    }

    /// Interpolated minimum range seen so far (ZEM for non-intercepting runs).
    double min_range() const { return min_range_; }

private:
    TerminationParams params_;
    Vec2 prev_rel_{0.0, 0.0};
    double prev_range_ = 0.0;
    double prev_time_ = 0.0;
    double min_range_ = std::numeric_limits<double>::infinity();
    bool has_prev_ = false;
    bool approaching_ = false;
};

}  // namespace salvo
