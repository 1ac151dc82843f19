#include <doctest.h>

#include <cmath>
#include <numbers>

#include "orbitsim/dynamics.hpp"
#include "orbitsim/rng.hpp"
#include "orbitsim/validation.hpp"

using namespace orbitsim;
using namespace orbitsim::dynamics;
using validation::scaled_state_error;

namespace {

const double kW = mean_motion_for_radius(constants::kDefaultOrbitRadiusKm);

State2D propagate(const Model &model, State2D s, Vec2 f, double dt, int steps) {
    for (int i = 0; i < steps; ++i) s = rk4_step(model, s, f, dt);
    return s;
}

} // namespace

TEST_CASE("ground_accel substitutes directly") {
    const GroundParams p{1.0, 0.25};
    CHECK(ground_accel({}, {}, {}, p) == Vec2{0, 0});
    CHECK(ground_accel({{0, 0}, {1, 0}}, {}, {}, p) == Vec2{-0.25, 0});
    // control and contact forces add
    const Vec2 a = ground_accel({}, {1, 2}, {0.5, -1}, GroundParams{2.0, 0.0});
    CHECK(a == Vec2{0.75, 0.5});
}

TEST_CASE("ground terminal velocity is f / gamma") {
    const GroundParams p{1.0, 0.25};
    const State2D s = propagate(Model{p}, {}, {1, 0}, 0.1, 2000); // 200 s
    CHECK(s.velocity.x == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.velocity.y == 0.0);
}

TEST_CASE("cw_accel") {
    const CwParams p{1e-3, 100.0};
    SUBCASE("radial origin is an equilibrium for any in-track offset") {
        CHECK(cw_accel({{0, 0.7}, {0, 0}}, {}, p) == Vec2{0, 0});
    }
    SUBCASE("substitution") {
        const Vec2 a = cw_accel({{1, 0}, {0, 0}}, {}, p);
        CHECK(a.x == doctest::Approx(3e-6).epsilon(1e-14));
        CHECK(a.y == 0.0);
    }
    SUBCASE("force converts N/kg to km/s^2") {
        const Vec2 a = cw_accel({}, {1, -2}, p);
        CHECK(a.x == doctest::Approx(1e-5).epsilon(1e-14));
        CHECK(a.y == doctest::Approx(-2e-5).epsilon(1e-14));
    }
}

TEST_CASE("j2_accel") {
    SUBCASE("substitution at c = 1.1") {
        J2Params p;
        p.mean_motion = 1e-3;
        p.c = 1.1;
        const Vec2 a = j2_accel({{1, 0}, {0, 0}}, {}, p);
        CHECK(a.x == doctest::Approx(4.05e-6).epsilon(1e-13));
        CHECK(a.y == 0.0);
    }
    SUBCASE("in-track coupling uses the radial velocity") {
        J2Params p;
        p.mean_motion = 1e-3;
        p.c = 1.1;
        // x alone must not drive the in-track channel
        CHECK(j2_accel({{1, 0}, {0, 0}}, {}, p).y == 0.0);
        CHECK(j2_accel({{0, 0}, {1e-3, 0}}, {}, p).y == doctest::Approx(-2.0 * 1e-3 * 1.1 * 1e-3));
    }
    SUBCASE("origin is an equilibrium for any c") {
        for (double c : {0.9, 1.0, 1.3}) {
            J2Params p;
            p.mean_motion = kW;
            p.c = c;
            CHECK(j2_accel({}, {}, p) == Vec2{0, 0});
        }
    }
    SUBCASE("c = 1 matches cw bit for bit") {
        Rng rng(11);
        J2Params j2;
        j2.mean_motion = kW;
        const CwParams cw{kW, 100.0};
        for (int i = 0; i < 2000; ++i) {
            const State2D s{{rng.uniform(-2, 2), rng.uniform(-2, 2)}, {rng.uniform(-1e-2, 1e-2), rng.uniform(-1e-2, 1e-2)}};
            const Vec2 f{rng.uniform(-1, 1), rng.uniform(-1, 1)};
            REQUIRE(j2_accel(s, f, j2) == cw_accel(s, f, cw));
        }
    }
}

TEST_CASE("z_accel") {
    const CwParams cw{1e-3, 100.0};
    CHECK(z_accel({0.0, 0.3}, cw) == 0.0);
    CHECK(z_accel({1.0, 0.0}, cw) == doctest::Approx(-1e-6).epsilon(1e-14));
    J2Params j2;
    j2.mean_motion = 1e-3;
    CHECK(z_accel({1.0, 0.0}, j2) == z_accel({1.0, 0.0}, cw));
    j2.c = 1.1;
    CHECK(z_accel({1.0, 0.0}, j2) == doctest::Approx((2.0 - 3.0 * 1.21) * 1e-6).epsilon(1e-13));
}

TEST_CASE("z propagation is a harmonic oscillator at the mean motion") {
    const CwParams cw{kW, 100.0};
    const double period = 2.0 * std::numbers::pi / kW;
    StateZ s{0.2, 0.0};
    const int steps = 6000;
    for (int i = 0; i < steps; ++i) s = rk4_step_z(s, cw, period / steps);
    CHECK(s.z == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(std::abs(s.z_dot) < 1e-12);
}

TEST_CASE("c_param") {
    SUBCASE("critical inclination gives c = 1") {
        const CParam cp = c_param(kCriticalInclinationRad, constants::kJ2, constants::kEarthRadiusKm,
                                  constants::kDefaultOrbitRadiusKm);
        CHECK(std::abs(cp.s) < 1e-18);
        CHECK(cp.c == 1.0);
        CHECK(kCriticalInclinationRad * 180.0 / std::numbers::pi == doctest::Approx(54.7356).epsilon(1e-6));
    }
    SUBCASE("golden values from a 40-digit evaluation") {
        const auto at = [](double deg) {
            return c_param(deg * std::numbers::pi / 180.0, 1.08263e-3, 6378.137, 6878.137);
        };
        CHECK(at(0).s == doctest::Approx(0.0013964241775162534095).epsilon(1e-14));
        CHECK(at(0).c == doctest::Approx(1.0006979685087385314).epsilon(1e-15));
        CHECK(at(90).s == doctest::Approx(-0.00069821208875812670474).epsilon(1e-14));
        CHECK(at(90).c == doctest::Approx(0.9996508329968228828).epsilon(1e-15));
        CHECK(at(90).c < 1.0);
        CHECK(at(28).c == doctest::Approx(1.0004672702852930465).epsilon(1e-15));
    }
    SUBCASE("even in inclination and monotone in cos 2phi") {
        double prev_s = -1.0;
        for (double deg = 90.0; deg >= 0.0; deg -= 5.0) {
            const double phi = deg * std::numbers::pi / 180.0;
            const CParam a = c_param(phi, constants::kJ2, constants::kEarthRadiusKm, 6878.137);
            const CParam b = c_param(-phi, constants::kJ2, constants::kEarthRadiusKm, 6878.137);
            CHECK(a.s == b.s);
            CHECK(a.s > prev_s); // cos 2phi increases as phi decreases on [0, 90]
            prev_s = a.s;
        }
    }
    SUBCASE("bad geometry and non-physical s are rejected") {
        CHECK_THROWS_AS(c_param(0.0, constants::kJ2, 7000.0, 6878.0), InvalidParameter);
        CHECK_THROWS_AS(c_param(std::numbers::pi / 2, 10.0, 6378.0, 6400.0), InvalidParameter);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(GroundParams({0.0, 0.25}).validate(), InvalidParameter);
    CHECK_THROWS_AS(GroundParams({1.0, -0.1}).validate(), InvalidParameter);
    CHECK_THROWS_AS(CwParams({0.0, 1.0}).validate(), InvalidParameter);
    CHECK_NOTHROW(J2Params::from_orbit(kW, 100.0, 0.3));
}

TEST_CASE("rk4 is exact for uniform motion") {
    const auto zero = [](const State2D &, const Vec2 &) { return Vec2{}; };
    const State2D s = rk4_step(zero, {{0, 0}, {1, 0}}, {}, 1.0);
    CHECK(s.position == Vec2{1, 0});
    CHECK(s.velocity == Vec2{1, 0});
}

TEST_CASE("cw_closed_form") {
    SUBCASE("identity at t = 0") {
        const State2D s0{{0.3, -0.2}, {1e-4, 2e-4}};
        CHECK(cw_closed_form(s0, kW, 0.0) == s0);
    }
    SUBCASE("in-track offsets at rest stay put") {
        const State2D s0{{0.0, 0.4}, {0, 0}};
        for (double t : {10.0, 1000.0, 5000.0}) CHECK(cw_closed_form(s0, kW, t) == s0);
    }
    SUBCASE("closed 2:1 ellipse returns after one period") {
        const State2D s0{{1.0, 0.0}, {0.0, -2.0 * kW}};
        const State2D s = cw_closed_form(s0, kW, 2.0 * std::numbers::pi / kW);
        CHECK(scaled_state_error(s, s0, s0, kW) < 1e-12);
    }
    SUBCASE("satisfies the CW equations (central differences)") {
        const State2D s0{{0.4, -0.3}, {2e-4, -5e-4}};
        const CwParams p{kW, 100.0};
        const double h = 1.0;
        for (double t : {100.0, 1234.0, 4000.0}) {
            const State2D a = cw_closed_form(s0, kW, t - h);
            const State2D b = cw_closed_form(s0, kW, t + h);
            const State2D mid = cw_closed_form(s0, kW, t);
            const Vec2 accel_fd = (b.velocity - a.velocity) / (2 * h);
            const Vec2 vel_fd = (b.position - a.position) / (2 * h);
            const Vec2 accel = cw_accel(mid, {}, p);
            CHECK(norm(accel_fd - accel) < 1e-6 * norm(accel) + 1e-15);
            CHECK(norm(vel_fd - mid.velocity) < 1e-6 * norm(mid.velocity));
        }
    }
}

TEST_CASE("ground_closed_form") {
    const GroundParams p{1.0, 0.25};
    CHECK(ground_closed_form({{1, 2}, {3, 4}}, {1, 1}, p, 0.0) == State2D{{1, 2}, {3, 4}});
    // decay to rest without force
    CHECK(norm(ground_closed_form({{0, 0}, {1, 0}}, {}, p, 400.0).velocity) < 1e-40);
    // v_x(t) = 4 (1 - e^{-t/4}); x(100) and v(100) from a 40-digit evaluation
    const State2D s = ground_closed_form({}, {1, 0}, p, 100.0);
    CHECK(s.velocity.x == doctest::Approx(3.9999999999444482245).epsilon(1e-15));
    CHECK(s.position.x == doctest::Approx(384.0000000002222071).epsilon(1e-15));
    // undamped case is a pure double integrator
    const State2D u = ground_closed_form({{0, 0}, {1, 0}}, {2, 0}, GroundParams{1.0, 0.0}, 3.0);
    CHECK(u.position.x == doctest::Approx(3.0 + 9.0));
    CHECK(u.velocity.x == doctest::Approx(7.0));
}

TEST_CASE("rk4 agrees with the analytic oracles") {
    SUBCASE("force-free CW, dt = 1 s, 3600 steps") {
        const CwParams p{kW, 100.0};
        const State2D s0{{0.1, 0.0}, {0.0, -2.0 * kW * 0.1}};
        const State2D s = propagate(Model{p}, s0, {}, 1.0, 3600);
        CHECK(scaled_state_error(s, cw_closed_form(s0, kW, 3600.0), s0, kW) < 1e-6);
    }
    SUBCASE("damped ground under constant force") {
        const GroundParams p{1.0, 0.25};
        const State2D s = propagate(Model{p}, {}, {1, 0}, 0.1, 1000);
        const State2D want = ground_closed_form({}, {1, 0}, p, 100.0);
        CHECK(std::abs(s.position.x - want.position.x) / want.position.x < 1e-6);
        CHECK(std::abs(s.velocity.x - want.velocity.x) / want.velocity.x < 1e-6);
    }
}

TEST_CASE("rk4 converges at fourth order on the closed ellipse") {
    const CwParams p{kW, 100.0};
    const State2D s0{{0.1, 0.0}, {0.0, -2.0 * kW * 0.1}};
    const double period = 2.0 * std::numbers::pi / kW;
    const auto error = [&](int steps) {
        return scaled_state_error(propagate(Model{p}, s0, {}, period / steps, steps), s0, s0, kW);
    };
    const double coarse = error(16);
    const double fine = error(32);
    CHECK(coarse / fine >= 8.0);
    CHECK(error(64) < fine);
}

TEST_CASE("damped ground speed never increases without force") {
    const GroundParams p{1.0, 0.25};
    State2D s{{0, 0}, {1.5, -0.7}};
    double speed = norm(s.velocity);
    for (int i = 0; i < 500; ++i) {
        s = rk4_step(Model{p}, s, {}, 0.1);
        REQUIRE(norm(s.velocity) <= speed);
        speed = norm(s.velocity);
    }
}

TEST_CASE("all propagated states stay finite") {
    Rng rng(5);
    const Model models[] = {GroundParams{}, CwParams{kW, 100.0}, J2Params::from_orbit(kW, 100.0, 0.0)};
    for (const auto &m : models) {
        State2D s{{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {0, 0}};
        for (int i = 0; i < 100; ++i) {
            const double dt = std::holds_alternative<GroundParams>(m) ? 0.1 : 36.0;
            s = rk4_step(m, s, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, dt);
            REQUIRE(is_finite(s.position));
            REQUIRE(is_finite(s.velocity));
        }
    }
}
