#include "orbitsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace orbitsim {

namespace {

double softplus(double z) { return z > 30.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check(bool ok, const char *field, const std::string &msg) {
    if (!ok) throw ConfigError(std::string(field) + ": " + msg, field);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

std::string_view to_string(EntityKind kind) {
    switch (kind) {
    case EntityKind::agent: return "agent";
    case EntityKind::obstacle: return "obstacle";
    case EntityKind::goal: return "goal";
    }
    return "?";
}

std::string_view to_string(DynamicsRegime regime) {
    switch (regime) {
    case DynamicsRegime::ground: return "ground";
    case DynamicsRegime::cw: return "cw";
    case DynamicsRegime::cw_j2: return "cw_j2";
    }
    return "?";
}

std::string_view to_string(ActionMode mode) {
    return mode == ActionMode::discrete5 ? "discrete5" : "continuous";
}

DynamicsRegime parse_regime(std::string_view name) {
    if (name == "ground") return DynamicsRegime::ground;
    if (name == "cw") return DynamicsRegime::cw;
    if (name == "cw_j2") return DynamicsRegime::cw_j2;
    throw ConfigError("regime: expected one of ground, cw, cw_j2 (got '" + std::string(name) + "')", "regime");
}

ActionMode parse_action_mode(std::string_view name) {
    if (name == "discrete5") return ActionMode::discrete5;
    if (name == "continuous") return ActionMode::continuous;
    throw ConfigError("action_mode: expected discrete5 or continuous (got '" + std::string(name) + "')",
                      "action_mode");
}

// -- WorldConfig --------------------------------------------------------------

WorldConfig WorldConfig::space_defaults(DynamicsRegime regime) {
    WorldConfig c;
    c.regime = regime;
    return c;
}

WorldConfig WorldConfig::ground_defaults() {
    WorldConfig c;
    c.regime = DynamicsRegime::ground;
    c.dt = 0.1;
    c.max_steps = 25;
    c.mass = 1.0;
    return c;
}

void WorldConfig::validate() const {
    check(n_agents >= 1, "n_agents", "must be >= 1");
    check(n_obstacles >= 0, "n_obstacles", "must be >= 0");
    check(max_steps >= 1, "max_steps", "must be >= 1");
    check(positive(dt), "dt", "must be > 0");
    check(positive(env_half_width), "env_half_width", "must be > 0");
    check(positive(sensing_radius), "sensing_radius", "must be > 0");
    check(positive(action_force), "action_force", "must be > 0");
    check(positive(goal_reach_threshold), "goal_reach_threshold", "must be > 0");
    check(positive(agent_radius), "agent_radius", "must be > 0");
    check(positive(obstacle_radius), "obstacle_radius", "must be > 0");
    check(std::isfinite(contact_gain) && contact_gain >= 0.0, "contact_gain", "must be >= 0");
    check(positive(contact_margin), "contact_margin", "must be > 0");
    check(std::isfinite(placement_margin) && placement_margin >= 0.0, "placement_margin", "must be >= 0");
    check(max_placement_attempts >= 1, "max_placement_attempts", "must be >= 1");
    check(std::isfinite(reward_collision), "reward_collision", "must be finite");
    check(std::isfinite(reward_goal), "reward_goal", "must be finite");
    check(positive(mass), "mass", "must be > 0");
    check(std::isfinite(damping) && damping >= 0.0, "damping", "must be >= 0");
    if (omega_n) check(positive(*omega_n), "omega_n", "must be > 0");
    check(positive(mu), "mu", "must be > 0");
    check(positive(earth_radius), "earth_radius", "must be > 0");
    check(std::isfinite(orbit_radius) && orbit_radius > earth_radius, "orbit_radius", "must exceed earth_radius");
    check(std::isfinite(j2), "j2", "must be finite");
    check(std::isfinite(inclination_deg), "inclination_deg", "must be finite");
    if (regime == DynamicsRegime::cw_j2) {
        try {
            (void)dynamics::c_param(inclination_deg * std::numbers::pi / 180.0, j2, earth_radius, orbit_radius);
        } catch (const dynamics::InvalidParameter &e) {
            throw ConfigError(std::string("inclination_deg: ") + e.what(), "inclination_deg");
        }
    }
}

double WorldConfig::mean_motion() const {
    return omega_n ? *omega_n : dynamics::mean_motion_for_radius(orbit_radius, mu);
}

dynamics::Model WorldConfig::model() const {
    switch (regime) {
    case DynamicsRegime::ground: return dynamics::GroundParams{mass, damping};
    case DynamicsRegime::cw: return dynamics::CwParams{mean_motion(), mass};
    case DynamicsRegime::cw_j2:
        return dynamics::J2Params::from_orbit(mean_motion(), mass, inclination_deg * std::numbers::pi / 180.0,
                                              j2, earth_radius, orbit_radius);
    }
    throw ConfigError("unknown regime", "regime");
}

// -- actions and contact ------------------------------------------------------

Vec2 discrete_direction(int index) {
    switch (index) {
    case 0: return {0.0, 0.0};
    case 1: return {1.0, 0.0};
    case 2: return {-1.0, 0.0};
    case 3: return {0.0, 1.0};
    case 4: return {0.0, -1.0};
    default: throw SimulationError("discrete action index out of range: " + std::to_string(index));
    }
}

Vec2 control_force(const AgentAction &action, double action_force) {
    if (const int *k = std::get_if<int>(&action.value)) return discrete_direction(*k) * action_force;
    const Vec2 f = std::get<Vec2>(action.value);
    if (!is_finite(f)) throw SimulationError("non-finite continuous action");
    return clamp_norm(f, action_force);
}

Vec2 contact_force(const Vec2 &p_i, const Vec2 &p_j, double r_i, double r_j, double gain, double margin) {
    const Vec2 delta = p_i - p_j;
    const double dist = norm(delta);
    const Vec2 dir = dist > 0.0 ? delta / dist : Vec2{1.0, 0.0};
    const double magnitude = gain * margin * softplus((r_i + r_j - dist) / margin);
    return dir * magnitude;
}

// -- World --------------------------------------------------------------------

World::World(WorldConfig config, std::uint64_t seed)
    : config_(std::move(config)), model_(config_.model()), rng_(seed) {}

World World::generate(const WorldConfig &config, std::uint64_t seed) {
    config.validate();
    World w(config, seed);
    const int n = config.n_agents;
    const int k = config.n_obstacles;
    const double half = config.env_half_width;
    w.entities_.reserve(static_cast<std::size_t>(2 * n + k));

    const auto place = [&](EntityKind kind, double radius) {
        for (int attempt = 0; attempt < config.max_placement_attempts; ++attempt) {
            const Vec2 p{w.rng_.uniform(-half, half), w.rng_.uniform(-half, half)};
            const bool clear = std::all_of(w.entities_.begin(), w.entities_.end(), [&](const Entity &e) {
                return norm(p - e.state.position) > radius + e.radius + config.placement_margin;
            });
            if (clear) {
                Entity e;
                e.id = static_cast<EntityId>(w.entities_.size());
                e.kind = kind;
                e.state.position = p;
                e.radius = radius;
                w.entities_.push_back(e);
                return;
            }
        }
        std::ostringstream msg;
        msg << "cannot place " << to_string(kind) << " #" << w.entities_.size() << " after "
            << config.max_placement_attempts << " attempts: n_agents=" << n << ", n_obstacles=" << k
            << ", env area=" << 4.0 * half * half << ", agent_radius=" << config.agent_radius
            << ", obstacle_radius=" << config.obstacle_radius
            << ", goal_reach_threshold=" << config.goal_reach_threshold;
        throw PlacementError(msg.str());
    };

    for (int i = 0; i < n; ++i) place(EntityKind::agent, config.agent_radius);
    for (int i = 0; i < n; ++i) place(EntityKind::goal, config.goal_reach_threshold);
    for (int i = 0; i < k; ++i) place(EntityKind::obstacle, config.obstacle_radius);
    for (int i = 0; i < n; ++i) {
        w.entities_[i].mass = config.mass;
        w.entities_[i].goal_id = n + i;
    }

    w.init_bookkeeping();
    return w;
}

World World::from_entities(WorldConfig config, std::vector<Entity> entities, std::uint64_t seed) {
    const auto count = [&](EntityKind k) {
        return static_cast<int>(std::count_if(entities.begin(), entities.end(), [k](const Entity &e) { return e.kind == k; }));
    };
    const int n = count(EntityKind::agent);
    config.n_agents = n;
    config.n_obstacles = count(EntityKind::obstacle);
    config.validate();
    if (count(EntityKind::goal) != n) throw ConfigError("entities: need exactly one goal per agent", "entities");
    for (std::size_t i = 0; i < entities.size(); ++i) {
        Entity &e = entities[i];
        const auto id = static_cast<int>(i);
        const EntityKind want = id < n ? EntityKind::agent : id < 2 * n ? EntityKind::goal : EntityKind::obstacle;
        if (e.id != id || e.kind != want)
            throw ConfigError("entities: entity " + std::to_string(i) + " breaks the id layout", "entities");
        if (!is_finite(e.state.position) || !is_finite(e.state.velocity) || !(e.radius > 0.0))
            throw ConfigError("entities: entity " + std::to_string(i) + " has a bad state or radius", "entities");
        if (e.kind == EntityKind::agent) {
            if (e.goal_id && *e.goal_id != n + id)
                throw ConfigError("entities: agent " + std::to_string(i) + " must own goal " + std::to_string(n + id),
                                  "entities");
            e.goal_id = n + id;
            if (!(e.mass > 0.0)) e.mass = config.mass;
        } else {
            e.goal_id.reset();
        }
    }
    World w(config, seed);
    w.entities_ = std::move(entities);
    w.init_bookkeeping();
    return w;
}

void World::init_bookkeeping() {
    const auto un = static_cast<std::size_t>(config_.n_agents);
    reached_.assign(un, false);
    first_reach_.assign(un, std::nullopt);
    tally_.assign(un, 0);
    pair_overlap_.assign(physical_count() * physical_count(), 0);
    connectivity_.assign(un, {});
}

const Entity &World::entity(EntityId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= entities_.size())
        throw std::out_of_range("unknown entity id " + std::to_string(id));
    return entities_[static_cast<std::size_t>(id)];
}

std::size_t World::agent_index(EntityId agent) const {
    if (!is_agent(agent)) throw std::out_of_range("unknown agent id " + std::to_string(agent));
    return static_cast<std::size_t>(agent);
}

const Entity &World::goal_of(EntityId agent) const { return entity(*entity(static_cast<EntityId>(agent_index(agent))).goal_id); }

EntityId World::physical_id(std::size_t k) const {
    // physical slots: agents [0, n) then obstacles [n, n + k) -> ids [2n, 2n + k)
    const auto n = static_cast<std::size_t>(config_.n_agents);
    return static_cast<EntityId>(k < n ? k : k + n);
}

bool World::pair_overlaps(EntityId a, EntityId b) const {
    const Entity &ea = entity(a);
    const Entity &eb = entity(b);
    return norm(ea.state.position - eb.state.position) < ea.radius + eb.radius;
}

bool World::overlapping_any(EntityId agent) const {
    agent_index(agent);
    for (std::size_t k = 0; k < physical_count(); ++k) {
        const EntityId other = physical_id(k);
        if (other != agent && pair_overlaps(agent, other)) return true;
    }
    return false;
}

bool World::within_goal(EntityId agent) const {
    return norm(entity(agent).state.position - goal_of(agent).state.position) < config_.goal_reach_threshold;
}

RewardTerms World::reward_terms(EntityId agent) const {
    RewardTerms r;
    r.distance = -norm(entity(agent).state.position - goal_of(agent).state.position);
    r.collision = overlapping_any(agent) ? config_.reward_collision : 0.0;
    r.goal = within_goal(agent) ? config_.reward_goal : 0.0;
    return r;
}

bool World::agent_connected(EntityId agent) const {
    const Vec2 p = entity(agent).state.position;
    for (const Entity &e : entities_)
        if (e.id != agent && norm(e.state.position - p) <= config_.sensing_radius) return true;
    return false;
}

StepOutcome World::step(std::span<const AgentAction> actions) {
    const int n = config_.n_agents;
    if (static_cast<int>(actions.size()) != n)
        throw SimulationError("expected " + std::to_string(n) + " actions, got " + std::to_string(actions.size()));
    if (done()) throw SimulationError("step called after max_steps (" + std::to_string(config_.max_steps) + ")");

    const auto un = static_cast<std::size_t>(n);
    std::vector<Vec2> force(un);
    for (std::size_t i = 0; i < un; ++i) force[i] = control_force(actions[i], config_.action_force);

    // contact forces; each pair evaluated once so forces are exactly opposite
    const std::size_t phys = physical_count();
    for (std::size_t a = 0; a < un; ++a) {
        for (std::size_t b = a + 1; b < phys; ++b) {
            const Entity &ea = entities_[a];
            const Entity &eb = entities_[static_cast<std::size_t>(physical_id(b))];
            if (ea.state.position == eb.state.position) ++degenerate_contacts_;
            const Vec2 f = contact_force(ea.state.position, eb.state.position, ea.radius, eb.radius,
                                         config_.contact_gain, config_.contact_margin);
            force[a] += f;
            if (b < un) force[b] -= f;
        }
    }

    const double half = config_.env_half_width;
    for (std::size_t i = 0; i < un; ++i) {
        State2D s = dynamics::rk4_step(model_, entities_[i].state, force[i], config_.dt);
        if (!is_finite(s.position) || !is_finite(s.velocity)) {
            std::ostringstream msg;
            msg << "non-finite state for agent " << i << " at step " << step_index_ + 1;
            throw SimulationError(msg.str());
        }
        if (s.position.x > half || s.position.x < -half) {
            s.position.x = std::clamp(s.position.x, -half, half);
            s.velocity.x = 0.0;
        }
        if (s.position.y > half || s.position.y < -half) {
            s.position.y = std::clamp(s.position.y, -half, half);
            s.velocity.y = 0.0;
        }
        entities_[i].state = s;
    }
    ++step_index_;

    StepOutcome out;
    out.rewards.assign(un, 0.0);
    out.collision_onsets.assign(un, 0);
    out.colliding.assign(un, false);
    out.at_goal.assign(un, false);

    for (std::size_t a = 0; a < un; ++a) {
        for (std::size_t b = a + 1; b < phys; ++b) {
            const EntityId id_b = physical_id(b);
            const bool now = pair_overlaps(static_cast<EntityId>(a), id_b);
            std::uint8_t &prev = pair_overlap_[a * phys + b];
            if (now) {
                ++overlap_pair_steps_;
                out.colliding[a] = true;
                if (b < un) out.colliding[b] = true;
                if (!prev) {
                    ++collision_events_;
                    ++out.collision_onsets[a];
                    ++tally_[a];
                    if (b < un) {
                        ++out.collision_onsets[b];
                        ++tally_[b];
                    }
                }
            }
            prev = now ? 1 : 0;
        }
    }

    for (std::size_t i = 0; i < un; ++i) {
        const auto id = static_cast<EntityId>(i);
        const RewardTerms r = reward_terms(id);
        out.rewards[i] = r.total();
        out.joint_reward += r.total();
        out.at_goal[i] = within_goal(id);
        if (out.at_goal[i] && !reached_[i]) {
            reached_[i] = true;
            first_reach_[i] = step_index_;
        }
        connectivity_[i].push_back(agent_connected(id) ? 1 : 0);
    }
    out.done = done();
    if (sink_) emit(&out);
    return out;
}

void World::reset_goal(EntityId agent, double rho_max, Rng &rng) {
    const std::size_t i = agent_index(agent);
    if (!(rho_max >= 0.0) || !std::isfinite(rho_max)) throw std::invalid_argument("rho_max must be >= 0");
    const double radius = rho_max * std::sqrt(rng.uniform());
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    Entity &goal = entities_[static_cast<std::size_t>(*entities_[i].goal_id)];
    const double half = config_.env_half_width;
    Vec2 p = goal.state.position + Vec2{radius * std::cos(angle), radius * std::sin(angle)};
    p.x = std::clamp(p.x, -half, half);
    p.y = std::clamp(p.y, -half, half);
    goal.state.position = p;
    reached_[i] = false;
    first_reach_[i].reset();
}

void World::teleport_agent(EntityId agent, const State2D &state) {
    const std::size_t i = agent_index(agent);
    if (!is_finite(state.position) || !is_finite(state.velocity))
        throw SimulationError("teleport_agent: non-finite state");
    entities_[i].state = state;
}

void World::emit_snapshot() const {
    if (sink_) emit(nullptr);
}

void World::emit(const StepOutcome *outcome) const {
    for (const Entity &e : entities_) {
        TrajectoryRecord r;
        r.step = step_index_;
        r.id = e.id;
        r.kind = e.kind;
        r.position = e.state.position;
        r.velocity = e.state.velocity;
        if (outcome && e.kind == EntityKind::agent) {
            r.reward = outcome->rewards[static_cast<std::size_t>(e.id)];
            r.collision = outcome->colliding[static_cast<std::size_t>(e.id)];
        } else if (outcome && e.kind == EntityKind::obstacle) {
            for (EntityId a = 0; a < config_.n_agents; ++a)
                if (pair_overlaps(a, e.id)) r.collision = true;
        }
        sink_(r);
    }
}

} // namespace orbitsim
