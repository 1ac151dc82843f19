#pragma once

/**
 * @file dynamics.hpp
 * @brief Planar relative-motion models and their fixed-step integrator.
 *
 * Three acceleration models are provided:
 *  - ground: damped double integrator, SI units (m, m/s, N, kg).
 *  - cw:     Clohessy-Wiltshire relative motion about a circular target orbit.
 *            x is radial (outward), y is in-track. Lengths in km, forces in N.
 *  - cw_j2:  CW with the oblateness correction factor c; c = 1 recovers cw.
 *
 * All N -> km/s^2 conversion happens here (factor 1e-3 after dividing by mass).
 */

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

#include "orbitsim/vec2.hpp"

namespace orbitsim::dynamics {

namespace constants {
inline constexpr double kJ2 = 1.08263e-3;
inline constexpr double kEarthRadiusKm = 6378.137;
inline constexpr double kMuKm3PerS2 = 398600.4418;
/// 500 km altitude circular target orbit.
inline constexpr double kDefaultOrbitRadiusKm = kEarthRadiusKm + 500.0;
inline constexpr double kNewtonPerKgToKmPerS2 = 1e-3;
} // namespace constants

/// Inclination at which 1 + 3 cos(2 phi) = 0, i.e. c = 1.
inline const double kCriticalInclinationRad = 0.5 * std::acos(-1.0 / 3.0);

class InvalidParameter : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct State2D {
    Vec2 position;
    Vec2 velocity;
    friend constexpr bool operator==(const State2D &, const State2D &) = default;
};

/// Cross-track state. Decoupled from the plane and unused by the environment.
struct StateZ {
    double z = 0.0;
    double z_dot = 0.0;
};

struct GroundParams {
    double mass = 1.0;    // kg
    double damping = 0.25; // kg/s
    void validate() const;
};

struct CwParams {
    double mean_motion = 0.0; // rad/s
    double mass = 100.0;      // kg
    void validate() const;
};

struct CParam {
    double s = 0.0;
    double c = 1.0;
};

/// s = 3 J2 Re^2 / (8 r^2) (1 + 3 cos 2phi),  c = sqrt(1 + s).
/// Throws InvalidParameter unless r > Re > 0 and 1 + s > 0.
CParam c_param(double inclination_rad, double j2, double earth_radius_km, double orbit_radius_km);

struct J2Params {
    double mean_motion = 0.0;
    double mass = 100.0;
    double c = 1.0;
    double s = 0.0;
    double j2 = constants::kJ2;
    double earth_radius = constants::kEarthRadiusKm;
    double orbit_radius = constants::kDefaultOrbitRadiusKm;
    double inclination = kCriticalInclinationRad;

    /// Builds a consistent parameter set, deriving (s, c) from the orbit.
    static J2Params from_orbit(double mean_motion, double mass, double inclination_rad,
                               double j2 = constants::kJ2,
                               double earth_radius_km = constants::kEarthRadiusKm,
                               double orbit_radius_km = constants::kDefaultOrbitRadiusKm);
    void validate() const;
};

/// sqrt(mu / r^3)
double mean_motion_for_radius(double orbit_radius_km, double mu = constants::kMuKm3PerS2);

// -- accelerations -----------------------------------------------------------

/// (-gamma/m) v + (f_control + f_contact)/m, m/s^2.
Vec2 ground_accel(const State2D &state, const Vec2 &control_force, const Vec2 &contact_force,
                  const GroundParams &params);

Vec2 cw_accel(const State2D &state, const Vec2 &total_force, const CwParams &params);

Vec2 j2_accel(const State2D &state, const Vec2 &total_force, const J2Params &params);

double z_accel(const StateZ &state, const CwParams &params);
double z_accel(const StateZ &state, const J2Params &params);

using Model = std::variant<GroundParams, CwParams, J2Params>;

/// Dispatches to the acceleration of the active model; force is the total force.
Vec2 accel(const Model &model, const State2D &state, const Vec2 &total_force);

double model_mass(const Model &model);

// -- integration -------------------------------------------------------------

/// Classical RK4 with the force held constant over the step.
/// `accel_fn(state, force)` returns the acceleration.
template <typename AccelFn>
    requires std::invocable<AccelFn &, const State2D &, const Vec2 &>
State2D rk4_step(AccelFn &&accel_fn, const State2D &state, const Vec2 &force, double dt) {
    const auto deriv = [&](const State2D &s) {
        return State2D{s.velocity, accel_fn(s, force)};
    };
    const auto advance = [](const State2D &s, const State2D &d, double h) {
        return State2D{s.position + d.position * h, s.velocity + d.velocity * h};
    };
    const State2D k1 = deriv(state);
    const State2D k2 = deriv(advance(state, k1, 0.5 * dt));
    const State2D k3 = deriv(advance(state, k2, 0.5 * dt));
    const State2D k4 = deriv(advance(state, k3, dt));
    const double w = dt / 6.0;
    return State2D{
        state.position + (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position) * w,
        state.velocity + (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity) * w,
    };
}

State2D rk4_step(const Model &model, const State2D &state, const Vec2 &total_force, double dt);

StateZ rk4_step_z(const StateZ &state, const CwParams &params, double dt);
StateZ rk4_step_z(const StateZ &state, const J2Params &params, double dt);

// -- analytic solutions ------------------------------------------------------

/// Force-free CW state-transition solution.
State2D cw_closed_form(const State2D &initial, double mean_motion, double t);

/// Damped motion under a constant force. Handles damping == 0 as pure
/// double integration.
State2D ground_closed_form(const State2D &initial, const Vec2 &constant_force,
                           const GroundParams &params, double t);

} // namespace orbitsim::dynamics
