#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "orbitsim/harness.hpp"

using namespace orbitsim;
using namespace orbitsim::harness;

namespace {

// Teleports every agent onto its goal before each step.
void teleport_all(World &w) {
    for (EntityId i = 0; i < w.n_agents(); ++i) w.teleport_agent(i, {w.goal_of(i).state.position, {}});
}

// Ignores observations entirely; same action every step.
class ConstantPolicy final : public policy::Policy {
  public:
    AgentAction act(const policy::LocalObservation &, const policy::ObservationGraph &, Rng &) const override {
        return AgentAction::none();
    }
    std::string name() const override { return "constant"; }
};

PolicyProvider constant_policy() {
    return [](const WorldConfig &, int) -> PolicySet { return {std::make_shared<ConstantPolicy>()}; };
}

EpisodeRecord record(double total, double t, bool success, double cols, std::uint64_t seed) {
    EpisodeRecord r;
    r.seed = seed;
    r.metrics.total_reward = total;
    r.metrics.reward_per_agent = total / 3;
    r.metrics.time_fraction = t;
    r.metrics.success = success;
    r.metrics.collisions_per_agent = cols;
    r.metrics.connectivity = {1.0};
    return r;
}

} // namespace

TEST_CASE("time_fraction") {
    CHECK(time_fraction(44, 100) == doctest::Approx(0.44));
    CHECK(time_fraction(std::nullopt, 100) == 1.0);
    CHECK(time_fraction(100, 100) == 1.0);
}

TEST_CASE("episode metrics with scripted motion") {
    WorldConfig c = WorldConfig::space_defaults();
    c.n_obstacles = 0;
    const PolicySet pol = named_policy("random")(c, 0);

    SUBCASE("agents sitting on their goals") {
        EpisodeOptions o;
        o.before_step = teleport_all;
        const auto m = run_episode(c, pol, 3, o);
        CHECK(m.success);
        for (double t : m.agent_time_fraction) CHECK(t == doctest::Approx(0.01));
    }
    SUBCASE("agent 0 reaches its goal at step 44") {
        EpisodeOptions o;
        o.before_step = [](World &w) {
            // park everybody far from the goals, then drop agent 0 in at step 43
            for (EntityId i = 0; i < w.n_agents(); ++i) {
                const Vec2 g = w.goal_of(i).state.position;
                const Vec2 away{g.x > 0 ? g.x - 0.5 : g.x + 0.5, g.y};
                w.teleport_agent(i, {away, {}});
            }
            if (w.step_index() == 43) w.teleport_agent(0, {w.goal_of(0).state.position, {}});
        };
        // keep agents from colliding with each other while parked
        c.n_agents = 1;
        const auto m = run_episode(c, pol, 3, o);
        CHECK(m.agent_time_fraction[0] == doctest::Approx(0.44));
        CHECK(m.success);
    }
    SUBCASE("goal never reached") {
        EpisodeOptions o;
        o.before_step = [](World &w) {
            for (EntityId i = 0; i < w.n_agents(); ++i) {
                const Vec2 g = w.goal_of(i).state.position;
                w.teleport_agent(i, {{g.x > 0 ? g.x - 0.5 : g.x + 0.5, g.y}, {}});
            }
        };
        c.n_agents = 1;
        const auto m = run_episode(c, pol, 8, o);
        CHECK(m.time_fraction == 1.0);
        CHECK_FALSE(m.success);
    }
}

TEST_CASE("episodes are deterministic in the seed") {
    const WorldConfig c = WorldConfig::space_defaults();
    for (const auto &name : policy::policy_names()) {
        const PolicySet p = named_policy(name)(c, 0);
        CHECK(run_episode(c, p, 77) == run_episode(c, p, 77));
    }
    const PolicySet p = named_policy("random")(c, 0);
    CHECK_FALSE(run_episode(c, p, 77) == run_episode(c, p, 78));
}

TEST_CASE("run_episode validates the policy set") {
    const WorldConfig c = WorldConfig::space_defaults();
    CHECK_THROWS_AS(run_episode(c, {}, 0), ConfigError);
    const PolicySet two = {named_policy("random")(c, 0)[0], named_policy("random")(c, 0)[0]};
    CHECK_THROWS_AS(run_episode(c, two, 0), ConfigError);
}

TEST_CASE("scalability protocol") {
    const WorldConfig c = WorldConfig::space_defaults();
    RunOptions opts;
    opts.base_seed = 5;
    opts.episode.before_step = teleport_all;
    const auto r = run_scalability(c, {{3, 5}, {3, 5, 10}, 4}, constant_policy(), opts);
    REQUIRE(r.cells.size() == 6);
    for (const auto &cell : r.cells) {
        CHECK(cell.success_pct == 100.0);
        CHECK(cell.time_fraction < 1.0);
        CHECK(cell.episodes == 4);
    }
    CHECK(r.cells[0].params == Params{{"train_n", 3}, {"test_m", 3}});
    CHECK(r.cells[5].params == Params{{"train_n", 5}, {"test_m", 10}});
    // rows with different train sizes see the same episodes
    CHECK(r.records[0].seed == r.records[3 * 4].seed);
}

TEST_CASE("inclination protocol") {
    WorldConfig c = WorldConfig::space_defaults(DynamicsRegime::cw_j2);
    c.max_steps = 40;
    const double critical = dynamics::kCriticalInclinationRad * 180.0 / std::numbers::pi;
    InclinationSpec spec;
    spec.runs = 2;
    RunOptions opts;
    opts.base_seed = 17;

    SUBCASE("grid shape and constant-stub spread") {
        const auto r = run_inclination_sweep(c, spec, constant_policy(), opts);
        CHECK(r.cells.size() == 8);
        opts.episode.before_step = teleport_all;
        const auto pinned = run_inclination_sweep(c, spec, constant_policy(), opts);
        for (const auto &cell : pinned.cells) {
            CHECK(cell.time_fraction_std == 0.0);
            CHECK(cell.collisions_per_agent_std == 0.0);
            CHECK(cell.success_pct == 100.0);
        }
    }
    SUBCASE("critical inclination reproduces the unperturbed regime") {
        spec.inclinations_deg = {critical};
        const auto r = run_inclination_sweep(c, spec, named_policy("greedy"), opts);
        WorldConfig cw = c;
        cw.regime = DynamicsRegime::cw;
        const PolicySet p = named_policy("greedy")(cw, 0);
        for (const auto &rec : r.records) {
            const auto m = run_episode(cw, p, rec.seed);
            CHECK(m.total_reward == doctest::Approx(rec.metrics.total_reward).epsilon(1e-12));
            CHECK(m.agent_time_fraction == rec.metrics.agent_time_fraction);
        }
    }
    SUBCASE("requires the perturbed regime") {
        CHECK_THROWS_AS(run_inclination_sweep(WorldConfig::space_defaults(), spec, constant_policy(), opts),
                        ConfigError);
    }
}

TEST_CASE("goal-sharing protocol") {
    const WorldConfig c = WorldConfig::space_defaults();
    CHECK(GoalSharingSpec{}.grid().size() == 51);
    CHECK(GoalSharingSpec{}.grid().back() == doctest::Approx(1.0));

    SUBCASE("improvement arithmetic") {
        CHECK(*improvement_success(0.9, 0.45) == doctest::Approx(100.0));
        CHECK(*improvement_time(0.4, 0.5) == doctest::Approx(20.0));
        CHECK_FALSE(improvement_success(0.3, 0.0).has_value());
    }
    SUBCASE("paired seeds, and a goal-agnostic policy sees no difference") {
        GoalSharingSpec spec{0.5, 1.0, 3};
        RunOptions opts;
        opts.base_seed = 2;
        const auto r = run_goal_sharing_sweep(c, spec, named_policy("random"), opts);
        REQUIRE(r.points.size() == 3);
        REQUIRE(r.records.size() == 3 * 3 * 2);
        for (std::size_t k = 0; k < r.records.size(); k += 2) {
            CHECK(r.records[k].arm == "share");
            CHECK(r.records[k + 1].arm == "hide");
            CHECK(r.records[k].seed == r.records[k + 1].seed);
            CHECK(r.records[k].metrics == r.records[k + 1].metrics);
        }
        for (const auto &p : r.points) CHECK(p.success_share == p.success_hide);
        CHECK(r.smoothed_success.size() == 3);
    }
}

TEST_CASE("moving_average") {
    const std::vector<double> flat(51, 3.5);
    for (double v : moving_average(flat)) CHECK(v == doctest::Approx(3.5));

    std::vector<double> impulse(51, 0.0);
    impulse[25] = 10.0;
    const auto m = moving_average(impulse);
    CHECK(m[25] == doctest::Approx(1.0));
    CHECK(m[21] == doctest::Approx(1.0)); // window [16, 25]
    CHECK(m[30] == doctest::Approx(1.0)); // window [25, 34]
    CHECK(m[20] == 0.0);
    CHECK(m[31] == 0.0);

    std::vector<double> ramp(20);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
    const auto r = moving_average(ramp);
    CHECK(r[0] == doctest::Approx((0 + 1 + 2 + 3 + 4) / 5.0));
    CHECK(r[19] == doctest::Approx((14 + 15 + 16 + 17 + 18 + 19) / 6.0));

    const std::vector<std::optional<double>> gaps{std::nullopt, 2.0, std::nullopt, 4.0};
    const auto g = moving_average(std::span<const std::optional<double>>(gaps), 2);
    CHECK_FALSE(g[0].has_value()); // window [j - 1, j]
    CHECK(*g[1] == 2.0);
    CHECK(*g[2] == 2.0);
    CHECK(*g[3] == 4.0);
    const std::vector<std::optional<double>> none(4);
    for (const auto &v : moving_average(std::span<const std::optional<double>>(none))) CHECK_FALSE(v.has_value());
}

TEST_CASE("aggregate") {
    std::vector<EpisodeRecord> rs{record(1, 0.2, true, 0, 1), record(2, 0.4, true, 1, 2), record(3, 1.0, false, 2, 3),
                                  record(2, 0.6, true, 1, 4)};
    const auto a = aggregate(rs);
    CHECK(a.total_reward == doctest::Approx(2.0));
    CHECK(a.total_reward_std == doctest::Approx(std::sqrt(0.5)));
    CHECK(a.success_pct == doctest::Approx(75.0));
    CHECK(a.time_fraction == doctest::Approx(0.55));

    std::mt19937 shuffle(1);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(rs.begin(), rs.end(), shuffle);
        const auto b = aggregate(rs);
        CHECK(b.total_reward == a.total_reward);
        CHECK(b.time_fraction_std == a.time_fraction_std);
    }
    CHECK_THROWS_AS(aggregate(std::vector<EpisodeRecord>{}), std::invalid_argument);

    auto other = rs;
    other[1].arm = "hide";
    CHECK_THROWS_AS(aggregate(other), std::invalid_argument);
    CHECK(aggregate_cells(other).size() == 2);

    EpisodeRecord r = record(180, 0.5, true, 0, 9);
    CHECK(r.metrics.reward_per_agent == doctest::Approx(60.0));
}

TEST_CASE("statistics helpers") {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(population_std(v) == doctest::Approx(2.0));
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("worker count does not change results") {
    const WorldConfig c = WorldConfig::space_defaults();
    RunOptions one;
    one.base_seed = 99;
    RunOptions many = one;
    many.jobs = 8;
    const ScalabilitySpec spec{{3}, {3, 5}, 6};
    const auto a = run_scalability(c, spec, named_policy("potential"), one);
    const auto b = run_scalability(c, spec, named_policy("potential"), many);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].metrics == b.records[i].metrics);

    const auto squares = parallel_map<int>(100, 8, [](std::size_t i) { return static_cast<int>(i * i); });
    for (std::size_t i = 0; i < squares.size(); ++i) CHECK(squares[i] == static_cast<int>(i * i));
    CHECK_THROWS_AS(parallel_map<int>(10, 4,
                                      [](std::size_t i) -> int {
                                          if (i == 3) throw std::runtime_error("boom");
                                          return 0;
                                      }),
                    std::runtime_error);
}
