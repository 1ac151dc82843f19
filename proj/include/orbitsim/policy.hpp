#pragma once

/**
 * @file policy.hpp
 * @brief Action-selection interface and scripted baseline controllers.
 *
 * Baselines are evaluation scaffolding: they read the true dynamics from the
 * world configuration and only the center agent's own goal (except
 * `potential+intent`, which also uses neighbors' shared goals).
 */

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "orbitsim/obsgraph.hpp"
#include "orbitsim/world.hpp"

namespace orbitsim::policy {

using obsgraph::LocalObservation;
using obsgraph::ObservationGraph;

class Policy {
  public:
    virtual ~Policy() = default;
    /// Deterministic given (inputs, stream state).
    virtual AgentAction act(const LocalObservation &obs, const ObservationGraph &graph, Rng &rng) const = 0;
    virtual void reset() {}
    virtual std::string name() const = 0;
};

/// Environment facts a baseline needs, extracted from a WorldConfig.
struct PolicyEnv {
    dynamics::Model model;
    double dt = 1.0;
    ActionMode action_mode = ActionMode::discrete5;
    double action_force = 1.0;
    double goal_reach_threshold = 0.05;
    double sensing_radius = 1.0;

    static PolicyEnv from_config(const WorldConfig &config);
    /// Acceleration produced by a full-magnitude action, env units / s^2.
    double max_accel() const;
};

/// Goal-seeking field shared by the greedy and potential baselines (continuous
/// mode): a saturated vector toward the goal, led by a braking term
/// (|v| / (2 a_max) + dt) v. Unit-free; multiply by action_force.
Vec2 goal_attraction(const PolicyEnv &env, const LocalObservation &obs, double gain = 1.0);

class GreedyGoalPolicy final : public Policy {
  public:
    explicit GreedyGoalPolicy(PolicyEnv env) : env_(std::move(env)) {}
    AgentAction act(const LocalObservation &obs, const ObservationGraph &graph, Rng &rng) const override;
    std::string name() const override { return "greedy"; }

    /// Predicted distance to goal after one step under discrete action k.
    double lookahead_distance(const LocalObservation &obs, int action) const;

  private:
    PolicyEnv env_;
};

struct PotentialParams {
    double attraction_gain = 1.0;
    /// Repulsion gain is repulsion_gain_factor * d^2 (d = sensing radius).
    double repulsion_gain_factor = 0.1;
    /// Head-on nudge, as a fraction of the opposing repulsion magnitude.
    double nudge_fraction = 0.1;
    /// potential+intent: a neighbor whose shared goal lies within this many
    /// reach thresholds of it is treated as settled.
    double settled_threshold_factor = 2.0;
    /// potential+intent: settled neighbors repel with radius d * this factor.
    double settled_range_factor = 0.2;
};

class PotentialFieldPolicy final : public Policy {
  public:
    PotentialFieldPolicy(PolicyEnv env, bool use_intent, PotentialParams params = {})
        : env_(std::move(env)), use_intent_(use_intent), params_(params) {}
    AgentAction act(const LocalObservation &obs, const ObservationGraph &graph, Rng &rng) const override;
    std::string name() const override { return use_intent_ ? "potential+intent" : "potential"; }

    /// Unit-free field: attraction plus repulsion from sensed agents/obstacles.
    Vec2 field(const LocalObservation &obs, const ObservationGraph &graph) const;

  private:
    PolicyEnv env_;
    bool use_intent_;
    PotentialParams params_;
};

class RandomPolicy final : public Policy {
  public:
    explicit RandomPolicy(PolicyEnv env) : env_(std::move(env)) {}
    AgentAction act(const LocalObservation &obs, const ObservationGraph &graph, Rng &rng) const override;
    std::string name() const override { return "random"; }

  private:
    PolicyEnv env_;
};

/// Repulsion of magnitude gain * (1/r - 1/range) / r^2 for r < range, directed
/// away from the neighbor at relative position `rel`. Coincident positions
/// push along +x.
Vec2 repulsion(const Vec2 &rel, double range, double gain);

/// Names: greedy, potential, potential+intent, random.
std::unique_ptr<Policy> make_policy(std::string_view name, const WorldConfig &config);
std::vector<std::string> policy_names();

} // namespace orbitsim::policy
