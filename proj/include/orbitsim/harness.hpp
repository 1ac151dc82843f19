#pragma once

/**
 * @file harness.hpp
 * @brief Episode runner, metrics and the experiment protocols.
 *
 * Protocols:
 *  - scalability: policy for n agents evaluated with m agents, 3 obstacles.
 *  - inclination: cw_j2 regime across an inclination grid, c recomputed per cell.
 *  - goal sharing: paired episodes (goals shared vs hidden) with a mid-episode
 *    goal reset of radius rho_max for one random agent.
 *
 * Episodes may run on a worker pool; every aggregate is reduced in seed order
 * so the result does not depend on the number of workers.
 */

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orbitsim/policy.hpp"
#include "orbitsim/world.hpp"

namespace orbitsim::harness {

struct EpisodeMetrics {
    double total_reward = 0.0;
    double reward_per_agent = 0.0;
    std::vector<double> agent_time_fraction; // T_i
    double time_fraction = 1.0;              // T, mean of T_i
    int collision_events = 0;                // pair onsets
    std::vector<int> agent_collisions;       // onsets credited per agent
    double collisions_per_agent = 0.0;       // sum(agent_collisions) / m
    bool success = false;
    std::vector<double> connectivity;
    std::optional<EntityId> reset_agent;

    friend bool operator==(const EpisodeMetrics &, const EpisodeMetrics &) = default;
};

/// T_i = first_reach_step / max_steps when reached, else 1.
double time_fraction(std::optional<int> first_reach_step, int max_steps);

/// One shared policy (size 1) or one per agent.
using PolicySet = std::vector<std::shared_ptr<const policy::Policy>>;

struct EpisodeOptions {
    /// Applies reset_goal to a uniformly chosen agent at step max_steps / 2.
    std::optional<double> goal_reset_rho;
    /// Called before actions are chosen at every step; may mutate the world.
    std::function<void(World &)> before_step;
    TrajectorySink trajectory;
};

/// Runs one episode. World seed = `seed`; agent i's policy stream is
/// derive_seed(seed, 1 + i). Simulation errors are rethrown with the seed.
EpisodeMetrics run_episode(const WorldConfig &config, const PolicySet &policies, std::uint64_t seed,
                           const EpisodeOptions &options = {});

using Params = std::vector<std::pair<std::string, double>>;

struct EpisodeRecord {
    Params params;
    std::string arm; // goal-sharing arm ("share"/"hide"), empty otherwise
    int instance = 0;
    std::uint64_t seed = 0;
    EpisodeMetrics metrics;
};

struct CellAggregate {
    Params params;
    std::string arm;
    int episodes = 0;
    double total_reward = 0.0, total_reward_std = 0.0;
    double reward_per_agent = 0.0, reward_per_agent_std = 0.0;
    double time_fraction = 0.0, time_fraction_std = 0.0;
    double collisions_per_agent = 0.0, collisions_per_agent_std = 0.0;
    double success_pct = 0.0;
    double median_collisions = 0.0;
    double connectivity = 0.0;
};

/// Means, population standard deviations (n divisor), S%. Records must be
/// non-empty and share params/arm. Independent of record order.
CellAggregate aggregate(std::span<const EpisodeRecord> records);

/// Groups by (params, arm) and aggregates each group; groups come out sorted.
std::vector<CellAggregate> aggregate_cells(std::span<const EpisodeRecord> records);

struct SweepResult {
    std::string protocol;
    std::vector<std::string> param_names;
    std::vector<CellAggregate> cells;
    std::vector<EpisodeRecord> records;
};

/// Builds the policies for a cell; `train_size` is only meaningful for the
/// scalability protocol (0 elsewhere).
using PolicyProvider = std::function<PolicySet(const WorldConfig &config, int train_size)>;

/// Shared-policy provider for a named baseline.
PolicyProvider named_policy(std::string name);

struct RunOptions {
    std::uint64_t base_seed = 0;
    int jobs = 1;
    EpisodeOptions episode; // trajectory sink is ignored by the sweeps
};

struct ScalabilitySpec {
    std::vector<int> train_sizes{3, 5};
    std::vector<int> test_sizes{3, 5, 10};
    int episodes = 100;
};

/// Seeds depend on (m, episode) only, so rows with different n are paired.
SweepResult run_scalability(const WorldConfig &base, const ScalabilitySpec &spec, const PolicyProvider &policy,
                            const RunOptions &options);

struct InclinationSpec {
    std::vector<double> inclinations_deg{0, 28, 45, 54, 63, 72, 81, 90};
    int runs = 5;
};

/// Requires base.regime == cw_j2. Run r uses the same seed in every cell.
SweepResult run_inclination_sweep(const WorldConfig &base, const InclinationSpec &spec,
                                  const PolicyProvider &policy, const RunOptions &options);

struct GoalSharingSpec {
    double rho_step = 0.02;
    double rho_max = 1.0;
    int instances = 100;

    std::vector<double> grid() const;
};

struct GoalSharingPoint {
    double rho_max = 0.0;
    int instances = 0;
    double success_share = 0.0, success_hide = 0.0; // fractions in [0, 1]
    double time_share = 0.0, time_hide = 0.0;
    std::optional<double> improvement_success_pct;
    std::optional<double> improvement_time_pct;
    double median_collisions_share = 0.0, median_collisions_hide = 0.0;
};

struct GoalSharingResult {
    std::vector<GoalSharingPoint> points;
    std::vector<EpisodeRecord> records;
    std::vector<std::optional<double>> smoothed_success; // moving averages
    std::vector<std::optional<double>> smoothed_time;
};

/// (S_share - S_hide) / S_hide * 100; nullopt when S_hide == 0.
std::optional<double> improvement_success(double s_share, double s_hide);
/// (T_hide - T_share) / T_hide * 100, so a shorter time is positive.
std::optional<double> improvement_time(double t_share, double t_hide);

/// Each (rho, instance) is run twice with the same seed, once per arm.
GoalSharingResult run_goal_sharing_sweep(const WorldConfig &base, const GoalSharingSpec &spec,
                                         const PolicyProvider &policy, const RunOptions &options);

/// Grid points covered by the moving-average window (0.2 km / 20 m).
inline constexpr int kMovingAverageWindow = 10;

/// Centered moving mean: output j averages inputs [j - w/2, j + w - 1 - w/2],
/// truncated at the boundaries.
std::vector<double> moving_average(std::span<const double> series, int window = kMovingAverageWindow);
/// Same, skipping missing values; a window with no values yields nullopt.
std::vector<std::optional<double>> moving_average(std::span<const std::optional<double>> series,
                                                  int window = kMovingAverageWindow);

/// Population standard deviation (n divisor).
double population_std(std::span<const double> values);
double median(std::vector<double> values);

/// Runs task(i) for i in [0, count) on `jobs` workers; results by index.
/// The exception from the lowest failing index is rethrown.
template <typename T> std::vector<T> parallel_map(std::size_t count, int jobs, const std::function<T(std::size_t)> &task);

} // namespace orbitsim::harness

#include "orbitsim/detail/parallel.hpp"
