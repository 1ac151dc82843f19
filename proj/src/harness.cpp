#include "orbitsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace orbitsim::harness {

namespace {

template <typename E> [[noreturn]] void rethrow_with_seed(const E &e, std::uint64_t seed) {
    throw E("episode seed " + std::to_string(seed) + ": " + e.what());
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<EpisodeRecord> run_records(std::size_t count, int jobs,
                                       const std::function<EpisodeRecord(std::size_t)> &task) {
    return parallel_map<EpisodeRecord>(count, jobs, task);
}

} // namespace

double time_fraction(std::optional<int> first_reach_step, int max_steps) {
    if (!first_reach_step) return 1.0;
    return static_cast<double>(*first_reach_step) / static_cast<double>(max_steps);
}

EpisodeMetrics run_episode(const WorldConfig &config, const PolicySet &policies, std::uint64_t seed,
                           const EpisodeOptions &options) {
    const int n = config.n_agents;
    if (policies.empty() || (policies.size() != 1 && static_cast<int>(policies.size()) != n))
        throw ConfigError("policy: need one shared policy or one per agent", "policy");
    for (const auto &p : policies)
        if (!p) throw ConfigError("policy: null policy", "policy");

    try {
        World world = World::generate(config, seed);
        if (options.trajectory) {
            world.set_trajectory_sink(options.trajectory);
            world.emit_snapshot();
        }
        const auto un = static_cast<std::size_t>(n);
        std::vector<Rng> streams;
        streams.reserve(un);
        for (std::size_t i = 0; i < un; ++i) streams.emplace_back(derive_seed(seed, 1 + i));

        EpisodeMetrics m;
        const int reset_step = config.max_steps / 2;
        std::vector<AgentAction> actions(un);
        while (!world.done()) {
            if (options.goal_reset_rho && world.step_index() == reset_step) {
                const auto agent = static_cast<EntityId>(world.rng().index(un));
                world.reset_goal(agent, *options.goal_reset_rho, world.rng());
                m.reset_agent = agent;
            }
            if (options.before_step) options.before_step(world);
            for (std::size_t i = 0; i < un; ++i) {
                const auto id = static_cast<EntityId>(i);
                const auto graph = obsgraph::build_graph(world, id, config.goal_sharing);
                const auto obs = obsgraph::local_observation(world, id);
                const auto &pol = policies.size() == 1 ? policies.front() : policies[i];
                actions[i] = pol->act(obs, graph, streams[i]);
            }
            m.total_reward += world.step(actions).joint_reward;
        }

        m.reward_per_agent = m.total_reward / n;
        m.success = true;
        for (EntityId i = 0; i < n; ++i) {
            const double t = time_fraction(world.first_reach_step(i), config.max_steps);
            m.agent_time_fraction.push_back(t);
            m.agent_collisions.push_back(world.collision_tally(i));
            if (!(t < 1.0)) m.success = false;
            const auto &log = world.connectivity_log()[static_cast<std::size_t>(i)];
            m.connectivity.push_back(static_cast<double>(std::count(log.begin(), log.end(), 1)) /
                                     static_cast<double>(log.size()));
        }
        m.time_fraction = mean_of(m.agent_time_fraction);
        m.collision_events = world.collision_events();
        m.collisions_per_agent =
            static_cast<double>(std::accumulate(m.agent_collisions.begin(), m.agent_collisions.end(), 0)) / n;
        return m;
    } catch (const SimulationError &e) {
        rethrow_with_seed(e, seed);
    } catch (const PlacementError &e) {
        rethrow_with_seed(e, seed);
    }
}

// -- statistics ---------------------------------------------------------------

double population_std(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double mu = mean_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CellAggregate aggregate(std::span<const EpisodeRecord> records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    std::vector<const EpisodeRecord *> sorted;
    for (const auto &r : records) {
        if (r.params != records.front().params || r.arm != records.front().arm)
            throw std::invalid_argument("aggregate: records from different cells");
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(), [](const EpisodeRecord *a, const EpisodeRecord *b) {
        return std::tie(a->seed, a->instance) < std::tie(b->seed, b->instance);
    });

    std::vector<double> total, per_agent, time, cols, events, conn;
    int successes = 0;
    for (const EpisodeRecord *r : sorted) {
        const EpisodeMetrics &m = r->metrics;
        total.push_back(m.total_reward);
        per_agent.push_back(m.reward_per_agent);
        time.push_back(m.time_fraction);
        cols.push_back(m.collisions_per_agent);
        events.push_back(m.collision_events);
        conn.push_back(m.connectivity.empty() ? 0.0 : mean_of(m.connectivity));
        successes += m.success ? 1 : 0;
    }

    CellAggregate c;
    c.params = records.front().params;
    c.arm = records.front().arm;
    c.episodes = static_cast<int>(sorted.size());
    c.total_reward = mean_of(total);
    c.total_reward_std = population_std(total);
    c.reward_per_agent = mean_of(per_agent);
    c.reward_per_agent_std = population_std(per_agent);
    c.time_fraction = mean_of(time);
    c.time_fraction_std = population_std(time);
    c.collisions_per_agent = mean_of(cols);
    c.collisions_per_agent_std = population_std(cols);
    c.success_pct = 100.0 * successes / c.episodes;
    c.median_collisions = median(events);
    c.connectivity = mean_of(conn);
    return c;
}

std::vector<CellAggregate> aggregate_cells(std::span<const EpisodeRecord> records) {
    std::map<std::pair<Params, std::string>, std::vector<EpisodeRecord>> groups;
    for (const auto &r : records) groups[{r.params, r.arm}].push_back(r);
    std::vector<CellAggregate> out;
    for (const auto &[key, group] : groups) out.push_back(aggregate(group));
    return out;
}

// -- protocols ----------------------------------------------------------------

PolicyProvider named_policy(std::string name) {
    return [name = std::move(name)](const WorldConfig &config, int) -> PolicySet {
        return {std::shared_ptr<const policy::Policy>(policy::make_policy(name, config))};
    };
}

SweepResult run_scalability(const WorldConfig &base, const ScalabilitySpec &spec, const PolicyProvider &policy,
                            const RunOptions &options) {
    if (spec.episodes < 1) throw ConfigError("episodes: must be >= 1", "episodes");
    struct Cell {
        int n, m;
        WorldConfig config;
        PolicySet policies;
    };
    std::vector<Cell> cells;
    for (int n : spec.train_sizes)
        for (int m : spec.test_sizes) {
            WorldConfig c = base;
            c.n_agents = m;
            c.n_obstacles = 3;
            c.validate();
            cells.push_back({n, m, c, policy(c, n)});
        }

    const auto per_cell = static_cast<std::size_t>(spec.episodes);
    EpisodeOptions episode = options.episode;
    episode.trajectory = nullptr;
    SweepResult out;
    out.protocol = "scalability";
    out.param_names = {"train_n", "test_m"};
    out.records = run_records(cells.size() * per_cell, options.jobs, [&](std::size_t k) {
        const Cell &cell = cells[k / per_cell];
        const auto e = static_cast<int>(k % per_cell);
        EpisodeRecord r;
        r.params = {{"train_n", cell.n}, {"test_m", cell.m}};
        r.instance = e;
        r.seed = derive_seed(derive_seed(options.base_seed, static_cast<std::uint64_t>(cell.m)),
                             static_cast<std::uint64_t>(e));
        r.metrics = run_episode(cell.config, cell.policies, r.seed, episode);
        return r;
    });
    for (std::size_t c = 0; c < cells.size(); ++c)
        out.cells.push_back(aggregate(std::span<const EpisodeRecord>(out.records.data() + c * per_cell, per_cell)));
    return out;
}

SweepResult run_inclination_sweep(const WorldConfig &base, const InclinationSpec &spec,
                                  const PolicyProvider &policy, const RunOptions &options) {
    if (base.regime != DynamicsRegime::cw_j2)
        throw ConfigError("regime: inclination sweep requires cw_j2", "regime");
    if (spec.runs < 1) throw ConfigError("runs: must be >= 1", "runs");
    struct Cell {
        double phi;
        WorldConfig config;
        PolicySet policies;
    };
    std::vector<Cell> cells;
    for (double phi : spec.inclinations_deg) {
        WorldConfig c = base;
        c.inclination_deg = phi;
        c.validate();
        cells.push_back({phi, c, policy(c, 0)});
    }
    const auto per_cell = static_cast<std::size_t>(spec.runs);
    EpisodeOptions episode = options.episode;
    episode.trajectory = nullptr;
    SweepResult out;
    out.protocol = "inclination";
    out.param_names = {"inclination_deg"};
    out.records = run_records(cells.size() * per_cell, options.jobs, [&](std::size_t k) {
        const Cell &cell = cells[k / per_cell];
        const auto run = static_cast<int>(k % per_cell);
        EpisodeRecord r;
        r.params = {{"inclination_deg", cell.phi}};
        r.instance = run;
        r.seed = derive_seed(options.base_seed, static_cast<std::uint64_t>(run));
        r.metrics = run_episode(cell.config, cell.policies, r.seed, episode);
        return r;
    });
    for (std::size_t c = 0; c < cells.size(); ++c)
        out.cells.push_back(aggregate(std::span<const EpisodeRecord>(out.records.data() + c * per_cell, per_cell)));
    return out;
}

std::vector<double> GoalSharingSpec::grid() const {
    if (!(rho_step > 0.0) || !(rho_max >= 0.0)) throw ConfigError("rho_step: must be > 0", "rho_step");
    const auto count = std::llround(rho_max / rho_step);
    std::vector<double> g;
    for (long long i = 0; i <= count; ++i) g.push_back(static_cast<double>(i) * rho_step);
    return g;
}

std::optional<double> improvement_success(double s_share, double s_hide) {
    if (s_hide == 0.0) return std::nullopt;
    return (s_share - s_hide) / s_hide * 100.0;
}

std::optional<double> improvement_time(double t_share, double t_hide) {
    if (t_hide == 0.0) return std::nullopt;
    return (t_hide - t_share) / t_hide * 100.0;
}

GoalSharingResult run_goal_sharing_sweep(const WorldConfig &base, const GoalSharingSpec &spec,
                                         const PolicyProvider &policy, const RunOptions &options) {
    if (spec.instances < 1) throw ConfigError("instances: must be >= 1", "instances");
    const std::vector<double> grid = spec.grid();
    WorldConfig share = base;
    share.goal_sharing = true;
    WorldConfig hide = base;
    hide.goal_sharing = false;
    share.validate();
    const PolicySet share_policies = policy(share, 0);
    const PolicySet hide_policies = policy(hide, 0);

    const auto per_rho = static_cast<std::size_t>(spec.instances);
    EpisodeOptions episode = options.episode;
    episode.trajectory = nullptr;

    GoalSharingResult out;
    // task layout: [rho][instance][arm], arm 0 = share, 1 = hide
    out.records = run_records(grid.size() * per_rho * 2, options.jobs, [&](std::size_t k) {
        const std::size_t rho_index = k / (2 * per_rho);
        const auto instance = static_cast<int>((k / 2) % per_rho);
        const bool sharing = k % 2 == 0;
        EpisodeRecord r;
        r.params = {{"rho_max_km", grid[rho_index]}};
        r.arm = sharing ? "share" : "hide";
        r.instance = instance;
        r.seed = derive_seed(derive_seed(options.base_seed, 0x676f616cULL + rho_index),
                             static_cast<std::uint64_t>(instance));
        EpisodeOptions opts = episode;
        opts.goal_reset_rho = grid[rho_index];
        r.metrics = run_episode(sharing ? share : hide, sharing ? share_policies : hide_policies, r.seed, opts);
        return r;
    });

    std::vector<std::optional<double>> imp_s, imp_t;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<EpisodeRecord> arm_share, arm_hide;
        for (std::size_t k = g * 2 * per_rho; k < (g + 1) * 2 * per_rho; ++k)
            (k % 2 == 0 ? arm_share : arm_hide).push_back(out.records[k]);
        const CellAggregate a = aggregate(arm_share);
        const CellAggregate b = aggregate(arm_hide);
        GoalSharingPoint p;
        p.rho_max = grid[g];
        p.instances = spec.instances;
        p.success_share = a.success_pct / 100.0;
        p.success_hide = b.success_pct / 100.0;
        p.time_share = a.time_fraction;
        p.time_hide = b.time_fraction;
        p.improvement_success_pct = improvement_success(p.success_share, p.success_hide);
        p.improvement_time_pct = improvement_time(p.time_share, p.time_hide);
        p.median_collisions_share = a.median_collisions;
        p.median_collisions_hide = b.median_collisions;
        imp_s.push_back(p.improvement_success_pct);
        imp_t.push_back(p.improvement_time_pct);
        out.points.push_back(p);
    }
    out.smoothed_success = moving_average(std::span<const std::optional<double>>(imp_s));
    out.smoothed_time = moving_average(std::span<const std::optional<double>>(imp_t));
    return out;
}

std::vector<std::optional<double>> moving_average(std::span<const std::optional<double>> series, int window) {
    if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
    const auto n = static_cast<std::ptrdiff_t>(series.size());
    const std::ptrdiff_t left = window / 2;
    const std::ptrdiff_t right = window - 1 - left;
    std::vector<std::optional<double>> out;
    out.reserve(series.size());
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        double sum = 0.0;
        int count = 0;
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, j - left); i <= std::min(n - 1, j + right); ++i)
            if (series[static_cast<std::size_t>(i)]) {
                sum += *series[static_cast<std::size_t>(i)];
                ++count;
            }
        out.push_back(count ? std::optional<double>(sum / count) : std::nullopt);
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
    std::vector<std::optional<double>> wrapped(series.begin(), series.end());
    std::vector<double> out;
    for (const auto &v : moving_average(std::span<const std::optional<double>>(wrapped), window)) out.push_back(*v);
    return out;
}

} // namespace orbitsim::harness
