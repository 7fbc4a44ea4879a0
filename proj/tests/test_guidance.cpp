#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "salvo/engagement.hpp"
#include "salvo/guidance.hpp"
#include "salvo/math.hpp"

using namespace salvo;
using Catch::Approx;

TEST_CASE("PNG commands the lateral channel only") {
    RelativeGeometry g;
    g.los_rate = 0.0;
    CHECK(png_command(g, 600.0, 4.0).a_l == Approx(0.0));
    CHECK(png_command(g, 600.0, 4.0).a_v == 0.0);

    g.los_rate = 0.01;
    CHECK(png_command(g, 600.0, 4.0).a_l == Approx(24.0));

    g.los_rate = -0.05;
    const auto cmd = png_command(g, 700.0, 4.0);
    CHECK(cmd.a_l == Approx(-140.0));
    CHECK(cmd.a_v == 0.0);
}

TEST_CASE("blend and clamp") {
    const Constraints limits;

    SECTION("zero gain reduces to pure PNG") {
        const auto u = blend_and_clamp({24.0, 0.0}, {10.0, 5.0}, 0.0, limits);
        CHECK(u.a_l == Approx(24.0));
        CHECK(u.a_v == Approx(0.0));
    }
    SECTION("unit gain removes PNG entirely") {
        const auto u = blend_and_clamp({24.0, 0.0}, {10.0, 5.0}, 1.0, limits);
        CHECK(u.a_l == Approx(10.0));
        CHECK(u.a_v == Approx(5.0));
    }
    SECTION("convex combination below saturation") {
        const auto u = blend_and_clamp({24.0, 0.0}, {10.0, 5.0}, 0.3, limits);
        CHECK(u.a_l == Approx(19.8));
        CHECK(u.a_v == Approx(1.5));
    }
    SECTION("saturated tracking command clamps to the lateral limit") {
        const auto u = blend_and_clamp({2000.0, 0.0}, {10.0, 5.0}, 0.3, limits);
        CHECK(u.a_l == Approx(490.5));  // 0.7*2000 + 3 clamps
        CHECK(u.a_v == Approx(1.5));
    }
}

TEST_CASE("blended commands always respect actuator limits") {
    const Constraints limits;
    std::mt19937_64 engine(3);
    std::uniform_real_distribution<double> track(-5000.0, 5000.0);
    std::uniform_real_distribution<double> cons_l(-limits.a_lmax, limits.a_lmax);
    std::uniform_real_distribution<double> cons_v(-limits.a_vmax, limits.a_vmax);
    std::uniform_real_distribution<double> gain(0.0, 1.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto u = blend_and_clamp({track(engine), 0.0}, {cons_l(engine), cons_v(engine)},
                                       gain(engine), limits);
        REQUIRE(std::abs(u.a_l) <= limits.a_lmax);
        REQUIRE(std::abs(u.a_v) <= limits.a_vmax);
    }
}

TEST_CASE("guidance params validate") {
    GuidanceParams p;
    p.gain = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.gain = 0.3;
    p.nav_constant = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("PNG closed loop intercepts from every case-1 initial condition") {
    // classical PN guarantee, used as a simulator smoke test
    const Constraints limits;
    const TerminationParams term;
    const Vec2 target_pos{9500.0, 9000.0};
    const struct {
        Vec2 pos;
        double alpha_deg;
        double v;
    } cases[] = {{{1900.0, 17000.0}, -25.0, 700.0},
                 {{1500.0, 13000.0}, 0.0, 650.0},
                 {{1400.0, 4000.0}, 5.0, 700.0},
                 {{3000.0, 1300.0}, 10.0, 680.0}};

    for (const auto& ic : cases) {
        MissileState m;
        m.position = ic.pos;
        m.velocity = ic.v;
        m.flight_path_angle = deg_to_rad(ic.alpha_deg);
        TargetState t;
        t.position = target_pos;

        TerminalDetector det(term);
        det.update(t.position - m.position, 0.0);
        bool hit = false;
        for (long step = 0; step < 12000 && !hit; ++step) {
            const auto g = relative_geometry(m, t);
            const auto u = blend_and_clamp(png_command(g, m.velocity, 4.0), {0.0, 0.0}, 0.0, limits);
            std::tie(m, t) = step_dynamics(m, t, u, 0.005, step * 0.005, limits);
            if (const auto terminal = det.update(t.position - m.position, (step + 1) * 0.005)) {
                CHECK(terminal->miss_distance < 1.0);
                hit = true;
            }
        }
        CHECK(hit);
    }
}
