#pragma once

#include <cstdint>
#include <iosfwd>

#include "orbitsim/dynamics.hpp"

namespace orbitsim::validation {

/// Integrator-vs-analytic checks reported by `orbitsim validate-dynamics`.
struct DynamicsReport {
    double cw_oracle_max_rel_error = 0.0;    // 5 random states, dt 1 s, 3600 steps
    double ellipse_return_rel_error = 0.0;   // one period of the closed 2:1 ellipse
    double j2_reduction_max_ulp = 0.0;       // j2_accel(c = 1) vs cw_accel
    double ground_oracle_max_rel_error = 0.0; // 1000 steps of 0.1 s
    double critical_c_error = 0.0;           // |c(critical inclination) - 1|

    static constexpr double kTolerance = 1e-6;
    bool passed() const;
};

DynamicsReport validate_dynamics(std::uint64_t seed = 0);

void print(std::ostream &out, const DynamicsReport &report);

/// Distance in units in the last place between two finite doubles.
std::uint64_t ulp_distance(double a, double b);

/// Max over components of |a - b| / scale, where positions are compared
/// directly and velocities after dividing by `rate` (so both carry length
/// units); scale is the norm of the similarly scaled reference state.
double scaled_state_error(const dynamics::State2D &got, const dynamics::State2D &want,
                          const dynamics::State2D &reference, double rate);

} // namespace orbitsim::validation
