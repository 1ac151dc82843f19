#include "orbitsim/dynamics.hpp"

#include <cmath>

namespace orbitsim::dynamics {

namespace {

void require(bool ok, const std::string &what) {
    if (!ok) throw InvalidParameter(what);
}

// Shared CW/J2 kernel. cw_accel goes through here with c = 1 so both models
// evaluate the same floating-point expression.
Vec2 relative_motion_accel(const State2D &s, const Vec2 &force, double mass, double w, double c) {
    const double k_factor = 5.0 * c * c - 2.0;
    const double coriolis = 2.0 * w * c;
    const Vec2 thrust = force / mass * constants::kNewtonPerKgToKmPerS2;
    return {k_factor * w * w * s.position.x + coriolis * s.velocity.y + thrust.x,
            -coriolis * s.velocity.x + thrust.y};
}

double z_kernel(const StateZ &s, double w, double c) { return (2.0 - 3.0 * c * c) * w * w * s.z; }

template <typename Params> StateZ rk4_z(const StateZ &s, const Params &p, double dt) {
    const auto f = [&](const StateZ &q) { return StateZ{q.z_dot, z_accel(q, p)}; };
    const auto adv = [](const StateZ &q, const StateZ &d, double h) {
        return StateZ{q.z + d.z * h, q.z_dot + d.z_dot * h};
    };
    const StateZ k1 = f(s);
    const StateZ k2 = f(adv(s, k1, 0.5 * dt));
    const StateZ k3 = f(adv(s, k2, 0.5 * dt));
    const StateZ k4 = f(adv(s, k3, dt));
    return {s.z + dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
            s.z_dot + dt / 6.0 * (k1.z_dot + 2.0 * k2.z_dot + 2.0 * k3.z_dot + k4.z_dot)};
}

} // namespace

void GroundParams::validate() const {
    require(std::isfinite(mass) && mass > 0.0, "ground mass must be > 0");
    require(std::isfinite(damping) && damping >= 0.0, "ground damping must be >= 0");
}

void CwParams::validate() const {
    require(std::isfinite(mean_motion) && mean_motion > 0.0, "mean motion must be > 0");
    require(std::isfinite(mass) && mass > 0.0, "satellite mass must be > 0");
}

CParam c_param(double inclination_rad, double j2, double earth_radius_km, double orbit_radius_km) {
    require(earth_radius_km > 0.0 && orbit_radius_km > earth_radius_km,
            "c_param requires orbit radius > Earth radius > 0");
    const double ratio = earth_radius_km / orbit_radius_km;
    const double s = 3.0 * j2 * ratio * ratio / 8.0 * (1.0 + 3.0 * std::cos(2.0 * inclination_rad));
    require(1.0 + s > 0.0, "c_param: 1 + s must be positive (s = " + std::to_string(s) + ")");
    return {s, std::sqrt(1.0 + s)};
}

J2Params J2Params::from_orbit(double mean_motion, double mass, double inclination_rad, double j2,
                              double earth_radius_km, double orbit_radius_km) {
    const CParam cp = c_param(inclination_rad, j2, earth_radius_km, orbit_radius_km);
    J2Params p;
    p.mean_motion = mean_motion;
    p.mass = mass;
    p.c = cp.c;
    p.s = cp.s;
    p.j2 = j2;
    p.earth_radius = earth_radius_km;
    p.orbit_radius = orbit_radius_km;
    p.inclination = inclination_rad;
    p.validate();
    return p;
}

void J2Params::validate() const {
    CwParams{mean_motion, mass}.validate();
    require(std::isfinite(c) && c > 0.0, "J2 parameter c must be finite and > 0");
    require(1.0 + s > 0.0, "J2 parameter requires 1 + s > 0");
}

double mean_motion_for_radius(double orbit_radius_km, double mu) {
    require(orbit_radius_km > 0.0 && mu > 0.0, "mean motion needs positive radius and mu");
    return std::sqrt(mu / (orbit_radius_km * orbit_radius_km * orbit_radius_km));
}

Vec2 ground_accel(const State2D &state, const Vec2 &control_force, const Vec2 &contact_force,
                  const GroundParams &params) {
    return state.velocity * (-params.damping / params.mass) +
           (control_force + contact_force) / params.mass;
}

Vec2 cw_accel(const State2D &state, const Vec2 &total_force, const CwParams &params) {
    return relative_motion_accel(state, total_force, params.mass, params.mean_motion, 1.0);
}

Vec2 j2_accel(const State2D &state, const Vec2 &total_force, const J2Params &params) {
    return relative_motion_accel(state, total_force, params.mass, params.mean_motion, params.c);
}

double z_accel(const StateZ &state, const CwParams &params) {
    return z_kernel(state, params.mean_motion, 1.0);
}

double z_accel(const StateZ &state, const J2Params &params) {
    return z_kernel(state, params.mean_motion, params.c);
}

Vec2 accel(const Model &model, const State2D &state, const Vec2 &total_force) {
    return std::visit(
        [&](const auto &p) -> Vec2 {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GroundParams>)
                return ground_accel(state, total_force, Vec2{}, p);
            else if constexpr (std::is_same_v<P, CwParams>)
                return cw_accel(state, total_force, p);
            else
                return j2_accel(state, total_force, p);
        },
        model);
}

double model_mass(const Model &model) {
    return std::visit([](const auto &p) { return p.mass; }, model);
}

State2D rk4_step(const Model &model, const State2D &state, const Vec2 &total_force, double dt) {
    return std::visit(
        [&](const auto &p) {
            using P = std::decay_t<decltype(p)>;
            return rk4_step(
                [&p](const State2D &s, const Vec2 &f) {
                    if constexpr (std::is_same_v<P, GroundParams>)
                        return ground_accel(s, f, Vec2{}, p);
                    else if constexpr (std::is_same_v<P, CwParams>)
                        return cw_accel(s, f, p);
                    else
                        return j2_accel(s, f, p);
                },
                state, total_force, dt);
        },
        model);
}

StateZ rk4_step_z(const StateZ &state, const CwParams &params, double dt) { return rk4_z(state, params, dt); }
StateZ rk4_step_z(const StateZ &state, const J2Params &params, double dt) { return rk4_z(state, params, dt); }

State2D cw_closed_form(const State2D &initial, double w, double t) {
    const double wt = w * t;
    const double sn = std::sin(wt);
    const double cs = std::cos(wt);
    const double omc = 1.0 - cs;
    const auto &[x0, y0] = initial.position;
    const auto &[vx0, vy0] = initial.velocity;
    State2D out;
    out.position.x = (4.0 - 3.0 * cs) * x0 + sn / w * vx0 + 2.0 / w * omc * vy0;
    out.position.y = 6.0 * (sn - wt) * x0 + y0 - 2.0 / w * omc * vx0 + (4.0 * sn - 3.0 * wt) / w * vy0;
    out.velocity.x = 3.0 * w * sn * x0 + cs * vx0 + 2.0 * sn * vy0;
    out.velocity.y = -6.0 * w * omc * x0 - 2.0 * sn * vx0 + (4.0 * cs - 3.0) * vy0;
    return out;
}

State2D ground_closed_form(const State2D &initial, const Vec2 &constant_force,
                           const GroundParams &params, double t) {
    if (params.damping == 0.0) {
        const Vec2 a = constant_force / params.mass;
        return {initial.position + initial.velocity * t + a * (0.5 * t * t), initial.velocity + a * t};
    }
    const double k = params.damping / params.mass;
    const Vec2 v_inf = constant_force / params.damping;
    const Vec2 dv = initial.velocity - v_inf;
    const double decay = std::exp(-k * t);
    const double growth = -std::expm1(-k * t); // 1 - e^{-kt}
    return {initial.position + v_inf * t + dv * (growth / k), v_inf + dv * decay};
}

} // namespace orbitsim::dynamics
