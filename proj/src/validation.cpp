#include "orbitsim/validation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "orbitsim/rng.hpp"

namespace orbitsim::validation {

using dynamics::State2D;

std::uint64_t ulp_distance(double a, double b) {
    if (a == b) return 0; // also +0 vs -0
    const auto key = [](double v) {
        const auto bits = std::bit_cast<std::int64_t>(v);
        return bits < 0 ? std::numeric_limits<std::int64_t>::min() - bits : bits;
    };
    const std::int64_t ka = key(a);
    const std::int64_t kb = key(b);
    return ka > kb ? static_cast<std::uint64_t>(ka) - static_cast<std::uint64_t>(kb)
                   : static_cast<std::uint64_t>(kb) - static_cast<std::uint64_t>(ka);
}

double scaled_state_error(const State2D &got, const State2D &want, const State2D &reference, double rate) {
    const double scale = std::sqrt(std::pow(norm(reference.position), 2) + std::pow(norm(reference.velocity) / rate, 2));
    const double errs[] = {std::abs(got.position.x - want.position.x), std::abs(got.position.y - want.position.y),
                           std::abs(got.velocity.x - want.velocity.x) / rate,
                           std::abs(got.velocity.y - want.velocity.y) / rate};
    return *std::max_element(std::begin(errs), std::end(errs)) / scale;
}

bool DynamicsReport::passed() const {
    return cw_oracle_max_rel_error < kTolerance && ellipse_return_rel_error < kTolerance &&
           j2_reduction_max_ulp <= 1.0 && ground_oracle_max_rel_error < kTolerance && critical_c_error < 1e-15;
}

DynamicsReport validate_dynamics(std::uint64_t seed) {
    using namespace dynamics;
    DynamicsReport rep;
    const double w = mean_motion_for_radius(constants::kDefaultOrbitRadiusKm);
    const CwParams cw{w, 100.0};
    Rng rng(seed);

    for (int k = 0; k < 5; ++k) {
        State2D s0{{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3)}};
        State2D s = s0;
        for (int i = 0; i < 3600; ++i) s = rk4_step(Model{cw}, s, Vec2{}, 1.0);
        rep.cw_oracle_max_rel_error =
            std::max(rep.cw_oracle_max_rel_error, scaled_state_error(s, cw_closed_form(s0, w, 3600.0), s0, w));
    }

    {
        const State2D s0{{0.1, 0.0}, {0.0, -2.0 * w * 0.1}};
        const double period = 2.0 * std::numbers::pi / w;
        const int steps = static_cast<int>(std::ceil(period));
        State2D s = s0;
        for (int i = 0; i < steps; ++i) s = rk4_step(Model{cw}, s, Vec2{}, period / steps);
        rep.ellipse_return_rel_error = scaled_state_error(s, s0, s0, w);
    }

    {
        const J2Params j2 = J2Params::from_orbit(w, 100.0, kCriticalInclinationRad);
        rep.critical_c_error = std::abs(j2.c - 1.0);
        J2Params unit = j2;
        unit.c = 1.0;
        unit.s = 0.0;
        for (int k = 0; k < 10000; ++k) {
            const State2D s{{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3)}};
            const Vec2 f{rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const Vec2 a = j2_accel(s, f, unit);
            const Vec2 b = cw_accel(s, f, cw);
            rep.j2_reduction_max_ulp = std::max({rep.j2_reduction_max_ulp, static_cast<double>(ulp_distance(a.x, b.x)),
                                                 static_cast<double>(ulp_distance(a.y, b.y))});
        }
    }

    {
        const GroundParams g{1.0, 0.25};
        const Vec2 f{1.0, 0.0};
        State2D s{};
        for (int i = 0; i < 1000; ++i) s = rk4_step(Model{g}, s, f, 0.1);
        const State2D want = ground_closed_form(State2D{}, f, g, 100.0);
        rep.ground_oracle_max_rel_error = std::max(norm(s.position - want.position) / norm(want.position),
                                                   norm(s.velocity - want.velocity) / norm(want.velocity));
    }
    return rep;
}

void print(std::ostream &out, const DynamicsReport &r) {
    out << "cw_oracle_max_rel_error      " << r.cw_oracle_max_rel_error << '\n'
        << "ellipse_return_rel_error     " << r.ellipse_return_rel_error << '\n'
        << "j2_reduction_max_ulp         " << r.j2_reduction_max_ulp << '\n'
        << "ground_oracle_max_rel_error  " << r.ground_oracle_max_rel_error << '\n'
        << "critical_inclination_c_error " << r.critical_c_error << '\n'
        << (r.passed() ? "PASS" : "FAIL") << '\n';
}

} // namespace orbitsim::validation
