#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "orbitsim/world.hpp"

using namespace orbitsim;

namespace {

WorldConfig open_ground(int agents, int obstacles = 0) {
    WorldConfig c = WorldConfig::ground_defaults();
    c.env_half_width = 10.0;
    c.n_agents = agents;
    c.n_obstacles = obstacles;
    c.max_steps = 50;
    return c;
}

std::vector<AgentAction> idle(int n) { return std::vector<AgentAction>(static_cast<std::size_t>(n), AgentAction::none()); }

State2D at(Vec2 p, Vec2 v = {}) { return {p, v}; }

} // namespace

TEST_CASE("generate_scenario") {
    const WorldConfig c = WorldConfig::space_defaults();
    SUBCASE("three agents, three goals, three obstacles") {
        const World w = World::generate(c, 1);
        REQUIRE(w.entities().size() == 9);
        int agents = 0, goals = 0, obstacles = 0;
        for (const Entity &e : w.entities()) {
            agents += e.kind == EntityKind::agent;
            goals += e.kind == EntityKind::goal;
            obstacles += e.kind == EntityKind::obstacle;
        }
        CHECK(agents == 3);
        CHECK(goals == 3);
        CHECK(obstacles == 3);
    }
    SUBCASE("deterministic in (config, seed)") {
        const World a = World::generate(c, 42);
        const World b = World::generate(c, 42);
        const World other = World::generate(c, 43);
        for (std::size_t i = 0; i < a.entities().size(); ++i) {
            CHECK(a.entities()[i].state == b.entities()[i].state);
            CHECK(a.entities()[i].goal_id == b.entities()[i].goal_id);
        }
        CHECK_FALSE(a.entities()[0].state == other.entities()[0].state);
    }
    SUBCASE("agents at rest, no initial overlap, each agent owns a distinct goal") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const World w = World::generate(c, seed);
            const auto es = w.entities();
            std::vector<int> goal_refs(es.size(), 0);
            for (const Entity &e : es) {
                CHECK(std::abs(e.state.position.x) <= c.env_half_width);
                if (e.kind != EntityKind::agent) continue;
                CHECK(e.state.velocity == Vec2{});
                REQUIRE(e.goal_id);
                CHECK(es[static_cast<std::size_t>(*e.goal_id)].kind == EntityKind::goal);
                ++goal_refs[static_cast<std::size_t>(*e.goal_id)];
            }
            for (std::size_t i = 0; i < es.size(); ++i) {
                CHECK(goal_refs[i] <= 1);
                for (std::size_t j = i + 1; j < es.size(); ++j)
                    CHECK(norm(es[i].state.position - es[j].state.position) >
                          es[i].radius + es[j].radius + c.placement_margin);
            }
        }
    }
    SUBCASE("crowded box is reported") {
        WorldConfig tiny = c;
        tiny.n_agents = 50;
        tiny.env_half_width = 0.1;
        tiny.sensing_radius = 0.1;
        CHECK_THROWS_AS(World::generate(tiny, 0), PlacementError);
        try {
            World::generate(tiny, 0);
        } catch (const PlacementError &e) {
            CHECK(std::string(e.what()).find("n_agents=50") != std::string::npos);
        }
    }
    SUBCASE("invalid config is rejected with the field name") {
        WorldConfig bad = c;
        bad.dt = -1;
        try {
            World::generate(bad, 0);
            FAIL("expected ConfigError");
        } catch (const ConfigError &e) {
            CHECK(e.field() == "dt");
        }
    }
}

TEST_CASE("contact_force") {
    const double k = 100.0, m = 1e-3;
    SUBCASE("negligible beyond ten margins") {
        const Vec2 f = contact_force({0.05 + 10 * m, 0}, {0, 0}, 0.025, 0.025, k, m);
        CHECK(norm(f) < k * m * std::exp(-10.0) * 2.0);
        CHECK(f.x > 0.0);
    }
    SUBCASE("softplus at zero penetration") {
        const Vec2 f = contact_force({0, 0.05}, {0, 0}, 0.025, 0.025, k, m);
        CHECK(f.y == doctest::Approx(k * m * std::log(2.0)).epsilon(1e-12));
        CHECK(std::abs(f.x) == 0.0);
    }
    SUBCASE("equal and opposite") {
        const Vec2 a{0.013, -0.02}, b{-0.004, 0.011};
        CHECK(contact_force(a, b, 0.025, 0.03, k, m) == -contact_force(b, a, 0.03, 0.025, k, m));
    }
    SUBCASE("coincident centers push along +x at the maximum") {
        const Vec2 f = contact_force({0.3, 0.3}, {0.3, 0.3}, 0.025, 0.025, k, m);
        CHECK(f.y == 0.0);
        CHECK(f.x == doctest::Approx(k * m * std::log1p(std::exp(50.0))));
    }
}

TEST_CASE("reward cases") {
    SUBCASE("at goal, alone, idle: +5") {
        World w = World::generate(open_ground(1), 3);
        w.teleport_agent(0, at(w.goal_of(0).state.position));
        const StepOutcome out = w.step(idle(1));
        CHECK(out.rewards[0] == 5.0);
        CHECK(out.at_goal[0]);
    }
    SUBCASE("distance 2 from the goal: -2") {
        World w = World::generate(open_ground(1), 3);
        Vec2 g = w.goal_of(0).state.position;
        const Vec2 offset = g.x > 0 ? Vec2{-2, 0} : Vec2{2, 0};
        w.teleport_agent(0, at(g + offset));
        const StepOutcome out = w.step(idle(1));
        CHECK(out.rewards[0] == doctest::Approx(-2.0).epsilon(1e-15));
        CHECK_FALSE(out.colliding[0]);
    }
    SUBCASE("overlapping agents each take -5") {
        WorldConfig c = open_ground(2);
        c.contact_gain = 0.0;
        World w = World::generate(c, 4);
        const Vec2 p = w.entity(0).state.position;
        w.teleport_agent(1, at(p + Vec2{0.01, 0}));
        const StepOutcome out = w.step(idle(2));
        for (EntityId i : {0, 1}) {
            const double dist = norm(w.entity(i).state.position - w.goal_of(i).state.position);
            CHECK(out.colliding[static_cast<std::size_t>(i)]);
            CHECK(out.rewards[static_cast<std::size_t>(i)] == doctest::Approx(-dist - 5.0));
        }
    }
    SUBCASE("at goal while colliding nets zero") {
        WorldConfig c = open_ground(2);
        c.contact_gain = 0.0;
        World w = World::generate(c, 5);
        const Vec2 g = w.goal_of(0).state.position;
        w.teleport_agent(0, at(g));
        w.teleport_agent(1, at(g + Vec2{0.02, 0}));
        const StepOutcome out = w.step(idle(2));
        CHECK(out.rewards[0] == doctest::Approx(0.0).epsilon(1e-15));
        const RewardTerms t = w.reward_terms(0);
        CHECK(t.distance == 0.0);
        CHECK(t.collision == -5.0);
        CHECK(t.goal == 5.0);
    }
    SUBCASE("joint reward is the sum") {
        World w = World::generate(open_ground(4), 6);
        for (EntityId i = 0; i < 4; ++i) w.teleport_agent(i, at(w.goal_of(i).state.position));
        const StepOutcome out = w.step(idle(4));
        CHECK(out.joint_reward == doctest::Approx(20.0));
    }
}

TEST_CASE("collision onsets") {
    WorldConfig c = open_ground(3);
    c.contact_gain = 0.0;
    c.damping = 0.0;

    SUBCASE("two agents passing through each other count once") {
        WorldConfig c2 = c;
        c2.n_agents = 2;
        World w = World::generate(c2, 7);
        w.teleport_agent(0, at({-0.5, 5.0}, {1, 0}));
        w.teleport_agent(1, at({0.5, 5.0}, {-1, 0}));
        int overlapping_steps = 0;
        for (int k = 0; k < 10; ++k) overlapping_steps += w.step(idle(2)).colliding[0];
        CHECK(overlapping_steps >= 1);
        CHECK(w.collision_events() == 1);
        CHECK(w.collision_tally(0) == 1);
        CHECK(w.collision_tally(1) == 1);
    }
    SUBCASE("sustained overlap is a single event") {
        WorldConfig c2 = c;
        c2.n_agents = 2;
        World w = World::generate(c2, 8);
        w.teleport_agent(1, at(w.entity(0).state.position + Vec2{0.03, 0}));
        for (int k = 0; k < 10; ++k) w.step(idle(2));
        CHECK(w.collision_events() == 1);
        CHECK(w.overlap_pair_steps() == 10);
    }
    SUBCASE("three mutually overlapping agents give one event per pair") {
        World w = World::generate(c, 9);
        const Vec2 p{1.0, 1.0};
        w.teleport_agent(0, at(p));
        w.teleport_agent(1, at(p + Vec2{0.02, 0}));
        w.teleport_agent(2, at(p + Vec2{0.01, 0.015}));
        w.step(idle(3));
        int brute = 0;
        for (EntityId a = 0; a < 3; ++a)
            for (EntityId b = a + 1; b < 3; ++b)
                brute += norm(w.entity(a).state.position - w.entity(b).state.position) <
                         w.entity(a).radius + w.entity(b).radius;
        CHECK(brute == 3);
        CHECK(w.collision_events() == brute);
        for (EntityId i = 0; i < 3; ++i) CHECK(w.collision_tally(i) == 2);
    }
    SUBCASE("touching an obstacle credits only the agent") {
        WorldConfig c2 = c;
        c2.n_agents = 1;
        c2.n_obstacles = 1;
        World w = World::generate(c2, 10);
        const Entity &obstacle = w.entity(2);
        REQUIRE(obstacle.kind == EntityKind::obstacle);
        w.teleport_agent(0, at(obstacle.state.position + Vec2{0.01, 0}));
        const StepOutcome out = w.step(idle(1));
        CHECK(out.colliding[0]);
        CHECK(w.collision_events() == 1);
        CHECK(w.collision_tally(0) == 1);
    }
}

TEST_CASE("goal latch and reset_goal") {
    World w = World::generate(open_ground(2), 11);
    const Vec2 g = w.goal_of(0).state.position;
    w.teleport_agent(0, at(g));
    w.step(idle(2));
    CHECK(w.reached_goal(0));
    CHECK(w.first_reach_step(0) == 1);
    w.teleport_agent(0, at(g + Vec2{1.0, 1.0}));
    w.step(idle(2));
    CHECK(w.reached_goal(0));
    CHECK(w.first_reach_step(0) == 1);

    SUBCASE("zero radius keeps the goal and clears the latch") {
        Rng rng(1);
        w.reset_goal(0, 0.0, rng);
        CHECK(w.goal_of(0).state.position == g);
        CHECK_FALSE(w.reached_goal(0));
        CHECK_FALSE(w.first_reach_step(0));
    }
    SUBCASE("errors") {
        Rng rng(1);
        CHECK_THROWS_AS(w.reset_goal(7, 0.1, rng), std::out_of_range);
        CHECK_THROWS_AS(w.reset_goal(0, -0.1, rng), std::invalid_argument);
    }
}

TEST_CASE("reset_goal samples the disk uniformly by area") {
    WorldConfig c = open_ground(1);
    c.env_half_width = 100.0;
    World w = World::generate(c, 12);
    Rng rng(99);
    const int samples = 100000;
    double sum = 0.0;
    Vec2 prev = w.goal_of(0).state.position;
    for (int i = 0; i < samples; ++i) {
        w.reset_goal(0, 1.0, rng);
        const Vec2 now = w.goal_of(0).state.position;
        const double d = norm(now - prev);
        REQUIRE(d <= 1.0 + 1e-12);
        sum += d;
        prev = now;
        if (norm(now) > 50.0) { // keep the walk away from the walls
            w.reset_goal(0, 0.0, rng);
            w.teleport_agent(0, at({}));
        }
    }
    CHECK(sum / samples == doctest::Approx(2.0 / 3.0).epsilon(0.01));
}

TEST_CASE("reset goal is clamped to the box") {
    WorldConfig c = open_ground(1);
    c.env_half_width = 1.0;
    World w = World::generate(c, 13);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        w.reset_goal(0, 5.0, rng);
        const Vec2 p = w.goal_of(0).state.position;
        REQUIRE(std::abs(p.x) <= 1.0);
        REQUIRE(std::abs(p.y) <= 1.0);
    }
}

TEST_CASE("step errors") {
    World w = World::generate(open_ground(2), 14);
    CHECK_THROWS_AS(w.step(idle(1)), SimulationError);
    std::vector<AgentAction> bad{AgentAction::discrete(5), AgentAction::none()};
    CHECK_THROWS_AS(w.step(bad), SimulationError);
    std::vector<AgentAction> nan{AgentAction::continuous({std::nan(""), 0}), AgentAction::none()};
    CHECK_THROWS_AS(w.step(nan), SimulationError);

    WorldConfig c = open_ground(2);
    c.contact_gain = std::numeric_limits<double>::max();
    c.contact_margin = 1.0;
    World blow = World::generate(c, 15);
    blow.teleport_agent(1, at(blow.entity(0).state.position + Vec2{0.001, 0}));
    CHECK_THROWS_AS(blow.step(idle(2)), SimulationError);

    WorldConfig shortc = open_ground(1);
    shortc.max_steps = 1;
    World s = World::generate(shortc, 16);
    CHECK(s.step(idle(1)).done);
    CHECK_THROWS_AS(s.step(idle(1)), SimulationError);
}

TEST_CASE("continuous actions are clamped to the force ball") {
    CHECK(norm(control_force(AgentAction::continuous({3, 4}), 1.0)) == doctest::Approx(1.0));
    CHECK(control_force(AgentAction::continuous({0.3, 0.4}), 1.0) == Vec2{0.3, 0.4});
    CHECK(control_force(AgentAction::discrete(4), 2.0) == Vec2{0, -2});
}

TEST_CASE("random episodes keep the world invariants") {
    for (const DynamicsRegime regime : {DynamicsRegime::ground, DynamicsRegime::cw, DynamicsRegime::cw_j2}) {
        WorldConfig c = regime == DynamicsRegime::ground ? WorldConfig::ground_defaults()
                                                        : WorldConfig::space_defaults(regime);
        c.n_agents = 5;
        c.max_steps = 60;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            World w = World::generate(c, seed);
            World twin = World::generate(c, seed);
            std::vector<Entity> initial(w.entities().begin(), w.entities().end());
            std::vector<bool> latched(5, false);
            Rng rng(seed + 100);
            while (!w.done()) {
                std::vector<AgentAction> acts;
                for (int i = 0; i < 5; ++i) acts.push_back(AgentAction::discrete(static_cast<int>(rng.index(5))));
                const StepOutcome out = w.step(acts);
                const StepOutcome out2 = twin.step(acts);
                REQUIRE(out.rewards == out2.rewards);
                for (const Entity &e : w.entities()) {
                    if (e.kind == EntityKind::agent) {
                        REQUIRE(std::abs(e.state.position.x) <= c.env_half_width);
                        REQUIRE(std::abs(e.state.position.y) <= c.env_half_width);
                        REQUIRE(e.state == twin.entity(e.id).state);
                    } else {
                        REQUIRE(e.state == initial[static_cast<std::size_t>(e.id)].state);
                    }
                }
                for (EntityId i = 0; i < 5; ++i) {
                    const auto ui = static_cast<std::size_t>(i);
                    // independent recomputation of the three reward terms
                    const Vec2 p = w.entity(i).state.position;
                    const double dist = norm(p - w.goal_of(i).state.position);
                    bool overlap = false;
                    for (const Entity &e : w.entities())
                        if (e.id != i && e.kind != EntityKind::goal && norm(e.state.position - p) < e.radius + c.agent_radius)
                            overlap = true;
                    const double expected = -dist + (overlap ? -5.0 : 0.0) + (dist < c.goal_reach_threshold ? 5.0 : 0.0);
                    REQUIRE(out.rewards[ui] == doctest::Approx(expected).epsilon(1e-14));
                    if (latched[ui]) REQUIRE(w.reached_goal(i));
                    latched[ui] = w.reached_goal(i);
                }
            }
            CHECK(w.step_index() == c.max_steps);
        }
    }
}
