#include "orbitsim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace orbitsim::policy {

namespace {

AgentAction from_field(const PolicyEnv &env, const Vec2 &field) {
    if (env.action_mode == ActionMode::continuous)
        return AgentAction::continuous(clamp_norm(field, 1.0) * env.action_force);
    int best = 0;
    double best_dot = 0.0;
    for (int k = 1; k < kDiscreteActionCount; ++k) {
        const double d = dot(discrete_direction(k), field);
        if (d > best_dot) {
            best = k;
            best_dot = d;
        }
    }
    return AgentAction::discrete(best);
}

} // namespace

PolicyEnv PolicyEnv::from_config(const WorldConfig &config) {
    config.validate();
    return {config.model(),          config.dt,
            config.action_mode,      config.action_force,
            config.goal_reach_threshold, config.sensing_radius};
}

double PolicyEnv::max_accel() const {
    const double per_mass = action_force / dynamics::model_mass(model);
    return std::holds_alternative<dynamics::GroundParams>(model)
               ? per_mass
               : per_mass * dynamics::constants::kNewtonPerKgToKmPerS2;
}

Vec2 goal_attraction(const PolicyEnv &env, const LocalObservation &obs, double gain) {
    if (norm(obs.rel_goal) < env.goal_reach_threshold) return {};
    const double lead = norm(obs.velocity) / (2.0 * env.max_accel()) + env.dt;
    const Vec2 aim = obs.rel_goal - obs.velocity * lead;
    return clamp_norm(aim / env.goal_reach_threshold, 1.0) * gain;
}

Vec2 repulsion(const Vec2 &rel, double range, double gain) {
    const double r = norm(rel);
    if (r >= range) return {};
    // coincident neighbor: same +x fallback as the contact model, evaluated
    // at a tiny but finite separation
    const double r_eff = std::max(r, 1e-9 * range);
    const Vec2 away = r > 0.0 ? rel / (-r) : Vec2{1.0, 0.0};
    return away * (gain * (1.0 / r_eff - 1.0 / range) / (r_eff * r_eff));
}

// -- greedy -------------------------------------------------------------------

double GreedyGoalPolicy::lookahead_distance(const LocalObservation &obs, int action) const {
    const dynamics::State2D now{obs.position, obs.velocity};
    const auto next = dynamics::rk4_step(env_.model, now, discrete_direction(action) * env_.action_force, env_.dt);
    return norm(obs.position + obs.rel_goal - next.position);
}

AgentAction GreedyGoalPolicy::act(const LocalObservation &obs, const ObservationGraph &, Rng &) const {
    if (env_.action_mode == ActionMode::continuous) return from_field(env_, goal_attraction(env_, obs));
    if (norm(obs.rel_goal) < env_.goal_reach_threshold) return AgentAction::none();
    int best = 0;
    double best_dist = lookahead_distance(obs, 0);
    for (int k = 1; k < kDiscreteActionCount; ++k) {
        const double d = lookahead_distance(obs, k);
        if (d < best_dist) {
            best = k;
            best_dist = d;
        }
    }
    return AgentAction::discrete(best);
}

// -- potential field ----------------------------------------------------------

Vec2 PotentialFieldPolicy::field(const LocalObservation &obs, const ObservationGraph &graph) const {
    const Vec2 attraction = goal_attraction(env_, obs, params_.attraction_gain);
    const double d = env_.sensing_radius;
    Vec2 total = attraction;
    for (const EntityId id : graph.in_neighbors()) {
        const obsgraph::GraphNode *node = graph.find(id);
        if (!node || node->feature.kind == EntityKind::goal) continue;
        double range = d;
        const auto &f = node->feature;
        if (use_intent_ && f.kind == EntityKind::agent && f.rel_goal &&
            norm(*f.rel_goal - f.rel_position) < params_.settled_threshold_factor * env_.goal_reach_threshold)
            range = d * params_.settled_range_factor;
        const Vec2 push = repulsion(f.rel_position, range, params_.repulsion_gain_factor * range * range);
        total += push;
        // head-on: repulsion exactly opposing the attraction gets a +90 degree nudge
        const double a = norm(attraction);
        const double p = norm(push);
        if (a > 0.0 && p > 0.0 && dot(attraction, push) < 0.0 &&
            std::abs(cross(attraction, push)) <= 1e-12 * a * p)
            total += left_perpendicular(attraction / a) * (params_.nudge_fraction * p);
    }
    return total;
}

AgentAction PotentialFieldPolicy::act(const LocalObservation &obs, const ObservationGraph &graph, Rng &) const {
    return from_field(env_, field(obs, graph));
}

// -- random -------------------------------------------------------------------

AgentAction RandomPolicy::act(const LocalObservation &, const ObservationGraph &, Rng &rng) const {
    if (env_.action_mode == ActionMode::discrete5)
        return AgentAction::discrete(static_cast<int>(rng.index(kDiscreteActionCount)));
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const double magnitude = env_.action_force * rng.uniform();
    return AgentAction::continuous({magnitude * std::cos(angle), magnitude * std::sin(angle)});
}

std::unique_ptr<Policy> make_policy(std::string_view name, const WorldConfig &config) {
    const PolicyEnv env = PolicyEnv::from_config(config);
    if (name == "greedy") return std::make_unique<GreedyGoalPolicy>(env);
    if (name == "potential") return std::make_unique<PotentialFieldPolicy>(env, false);
    if (name == "potential+intent") return std::make_unique<PotentialFieldPolicy>(env, true);
    if (name == "random") return std::make_unique<RandomPolicy>(env);
    if (name == "external")
        throw ConfigError("policy: 'external' is only available through the Python bindings", "policy");
    throw ConfigError("policy: unknown policy '" + std::string(name) +
                          "' (expected greedy, potential, potential+intent, random)",
                      "policy");
}

std::vector<std::string> policy_names() { return {"greedy", "potential", "potential+intent", "random"}; }

} // namespace orbitsim::policy
