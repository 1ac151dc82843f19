#pragma once

/**
 * @file world.hpp
 * @brief Multi-agent environment state: entities, stepping, collisions, rewards.
 *
 * Entity ids are dense: agents occupy [0, n), their goals [n, 2n) (agent i owns
 * goal n + i) and obstacles [2n, 2n + k). Agents and obstacles are physical;
 * goals only mark targets and never collide.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orbitsim/dynamics.hpp"
#include "orbitsim/errors.hpp"
#include "orbitsim/rng.hpp"
#include "orbitsim/vec2.hpp"

namespace orbitsim {

using EntityId = std::int64_t;
using dynamics::State2D;

enum class EntityKind { agent, obstacle, goal };
enum class DynamicsRegime { ground, cw, cw_j2 };
enum class ActionMode { discrete5, continuous };

std::string_view to_string(EntityKind kind);
std::string_view to_string(DynamicsRegime regime);
std::string_view to_string(ActionMode mode);
DynamicsRegime parse_regime(std::string_view name);
ActionMode parse_action_mode(std::string_view name);

struct Entity {
    EntityId id = 0;
    EntityKind kind = EntityKind::agent;
    State2D state;
    double radius = 0.0;
    double mass = 0.0;               // agents only
    std::optional<EntityId> goal_id; // agents only
};

struct WorldConfig {
    DynamicsRegime regime = DynamicsRegime::cw;
    double env_half_width = 1.0; // 2 km x 2 km box in the space regimes
    int n_agents = 3;
    int n_obstacles = 3;
    double sensing_radius = 1.0;
    double dt = 36.0;
    int max_steps = 100;
    ActionMode action_mode = ActionMode::discrete5;
    double action_force = 1.0; // N
    double goal_reach_threshold = 0.05;
    double agent_radius = 0.025;
    double obstacle_radius = 0.025;
    double contact_gain = 100.0;
    double contact_margin = 1e-3;
    double placement_margin = 0.01;
    int max_placement_attempts = 10000;
    double reward_collision = -5.0;
    double reward_goal = 5.0;
    bool goal_sharing = true;

    // physical parameters
    double mass = 100.0;   // kg
    double damping = 0.25; // kg/s, ground regime only
    std::optional<double> omega_n; // rad/s; derived from orbit_radius when unset
    double orbit_radius = dynamics::constants::kDefaultOrbitRadiusKm;
    double mu = dynamics::constants::kMuKm3PerS2;
    double j2 = dynamics::constants::kJ2;
    double earth_radius = dynamics::constants::kEarthRadiusKm;
    double inclination_deg = 45.0;

    std::uint64_t seed = 0;

    /// Space defaults: 100 steps of 36 s, 100 kg satellites.
    static WorldConfig space_defaults(DynamicsRegime regime = DynamicsRegime::cw);
    /// Ground defaults: 25 steps of 0.1 s, 1 kg particles with damping 0.25.
    static WorldConfig ground_defaults();

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    double mean_motion() const;
    dynamics::Model model() const;

    friend bool operator==(const WorldConfig &, const WorldConfig &) = default;
};

/// Discrete index in {0: none, 1: +x, 2: -x, 3: +y, 4: -y} or a planar force.
struct AgentAction {
    std::variant<int, Vec2> value{0};

    static AgentAction none() { return {0}; }
    static AgentAction discrete(int index) { return {index}; }
    static AgentAction continuous(Vec2 force) { return {force}; }

    bool is_discrete() const { return std::holds_alternative<int>(value); }
    friend bool operator==(const AgentAction &, const AgentAction &) = default;
};

inline constexpr int kDiscreteActionCount = 5;

/// Unit direction of a discrete action (zero for the no-op).
Vec2 discrete_direction(int index);

/// Control force in N. Continuous forces are clamped to the action-force ball;
/// discrete indices outside [0, 5) and non-finite forces throw SimulationError.
Vec2 control_force(const AgentAction &action, double action_force);

/// Softplus penetration force on i from j:
/// k * margin * log(1 + exp((r_i + r_j - |p_i - p_j|) / margin)) along (p_i - p_j).
/// Coincident centers push along +x with the same formula at zero separation.
Vec2 contact_force(const Vec2 &p_i, const Vec2 &p_j, double r_i, double r_j, double gain, double margin);

struct RewardTerms {
    double distance = 0.0;
    double collision = 0.0;
    double goal = 0.0;
    double total() const { return distance + collision + goal; }
};

struct StepOutcome {
    std::vector<double> rewards;        // per agent
    std::vector<int> collision_onsets;  // per agent, this step
    std::vector<bool> colliding;        // per agent, overlapping anything now
    std::vector<bool> at_goal;          // per agent
    double joint_reward = 0.0;
    bool done = false;
};

struct TrajectoryRecord {
    int step = 0;
    EntityId id = 0;
    EntityKind kind = EntityKind::agent;
    Vec2 position;
    Vec2 velocity;
    double reward = 0.0;
    bool collision = false;
};

using TrajectorySink = std::function<void(const TrajectoryRecord &)>;

class World {
  public:
    /// Random placement, rejection-sampled so that no two entities overlap
    /// (separation > r_a + r_b + placement_margin; a goal's radius is the
    /// reach threshold). Agents start at rest.
    static World generate(const WorldConfig &config, std::uint64_t seed);

    /// Scripted scenario. Entities must follow the id layout above (agents,
    /// then their goals, then obstacles; agent i -> goal n + i); n_agents and
    /// n_obstacles are taken from the list. Overlaps are allowed.
    static World from_entities(WorldConfig config, std::vector<Entity> entities, std::uint64_t seed = 0);

    const WorldConfig &config() const { return config_; }
    std::span<const Entity> entities() const { return entities_; }
    const Entity &entity(EntityId id) const;
    int n_agents() const { return config_.n_agents; }
    bool is_agent(EntityId id) const { return id >= 0 && id < config_.n_agents; }
    const Entity &goal_of(EntityId agent) const;

    int step_index() const { return step_index_; }
    bool done() const { return step_index_ >= config_.max_steps; }

    StepOutcome step(std::span<const AgentAction> actions);

    /// Reward terms evaluated on the current state.
    RewardTerms reward_terms(EntityId agent) const;
    double reward(EntityId agent) const { return reward_terms(agent).total(); }
    bool overlapping_any(EntityId agent) const;
    bool within_goal(EntityId agent) const;

    /// Moves the agent's goal by an area-uniform sample of the disk of radius
    /// rho_max (then clamps to the box) and clears its reached-goal latch.
    void reset_goal(EntityId agent, double rho_max, Rng &rng);

    /// Overwrites an agent's state; for scripted tests and external drivers.
    void teleport_agent(EntityId agent, const State2D &state);

    bool reached_goal(EntityId agent) const { return reached_.at(agent_index(agent)); }
    std::optional<int> first_reach_step(EntityId agent) const { return first_reach_.at(agent_index(agent)); }
    /// Collision onsets credited to this agent.
    int collision_tally(EntityId agent) const { return tally_.at(agent_index(agent)); }
    /// Pair onsets (one per pair per non-overlap -> overlap transition).
    int collision_events() const { return collision_events_; }
    /// Sum over steps of overlapping physical pairs.
    long overlap_pair_steps() const { return overlap_pair_steps_; }
    int degenerate_contacts() const { return degenerate_contacts_; }
    /// connectivity_log()[agent][k] is 1 when the agent had an entity within
    /// the sensing radius after step k + 1.
    const std::vector<std::vector<std::uint8_t>> &connectivity_log() const { return connectivity_; }

    Rng &rng() { return rng_; }

    void set_trajectory_sink(TrajectorySink sink) { sink_ = std::move(sink); }
    /// Emits one record per entity for the current step (used for step 0).
    void emit_snapshot() const;

  private:
    World(WorldConfig config, std::uint64_t seed);
    void init_bookkeeping();

    std::size_t agent_index(EntityId agent) const;
    std::size_t physical_count() const { return static_cast<std::size_t>(config_.n_agents + config_.n_obstacles); }
    EntityId physical_id(std::size_t k) const;
    bool pair_overlaps(EntityId a, EntityId b) const;
    bool agent_connected(EntityId agent) const;
    void emit(const StepOutcome *outcome) const;

    WorldConfig config_;
    dynamics::Model model_;
    std::vector<Entity> entities_;
    int step_index_ = 0;
    std::vector<bool> reached_;
    std::vector<std::optional<int>> first_reach_;
    std::vector<int> tally_;
    std::vector<std::uint8_t> pair_overlap_; // physical x physical, previous step
    int collision_events_ = 0;
    long overlap_pair_steps_ = 0;
    int degenerate_contacts_ = 0;
    std::vector<std::vector<std::uint8_t>> connectivity_;
    Rng rng_;
    TrajectorySink sink_;
};

} // namespace orbitsim
