#pragma once

/**
 * @file io.hpp
 * @brief Configuration files and result serialization.
 *
 * Config files are JSON objects with two optional sections:
 *
 *   { "world": { ...WorldConfig fields... }, "experiment": { ... } }
 *
 * Missing fields take the defaults of the selected regime (world.regime picks
 * space or ground defaults). Unknown keys are rejected.
 *
 * Outputs: trajectory.jsonl and episodes.jsonl (one JSON object per line,
 * doubles printed with 17 significant digits), sweep.csv (fixed header,
 * schema kSweepCsvSchema), manifest.json.
 */

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "orbitsim/harness.hpp"
#include "orbitsim/world.hpp"

namespace orbitsim::io {

inline constexpr std::string_view kToolVersion = "0.3.0";
inline constexpr std::string_view kSweepCsvSchema = "orbitsim.sweep.v1";
inline constexpr std::string_view kGoalSharingCsvSchema = "orbitsim.goal_sharing.v1";

struct ExperimentSpec {
    std::string policy = "greedy";
    int episodes = 10;
    int jobs = 1;
    std::vector<int> train_sizes{3, 5};
    std::vector<int> test_sizes{3, 5, 10};
    std::vector<double> inclinations_deg{0, 28, 45, 54, 63, 72, 81, 90};
    int inclination_runs = 5;
    double rho_step = 0.02;
    double rho_max = 1.0;
    int instances = 100;

    friend bool operator==(const ExperimentSpec &, const ExperimentSpec &) = default;
};

struct LoadedConfig {
    WorldConfig world;
    ExperimentSpec experiment;
    friend bool operator==(const LoadedConfig &, const LoadedConfig &) = default;
};

/// Throws ConfigError (unknown keys, wrong types, invariant violations).
LoadedConfig parse_config(const nlohmann::json &doc);
LoadedConfig parse_config_text(std::string_view text);
/// Throws ConfigError when the file cannot be read.
LoadedConfig load_config(const std::filesystem::path &path);

nlohmann::json to_json(const WorldConfig &config);
nlohmann::json to_json(const ExperimentSpec &spec);
nlohmann::json to_json(const LoadedConfig &config);

/// Closest known key within edit distance 2, if any.
std::optional<std::string> suggest_key(std::string_view unknown, std::span<const std::string> known);

/// "%.17g"
std::string format_double(double v);

std::string trajectory_line(const TrajectoryRecord &record);
std::string episode_line(const harness::EpisodeRecord &record);

void write_sweep_csv(std::ostream &out, const harness::SweepResult &result);
void write_goal_sharing_csv(std::ostream &out, const harness::GoalSharingResult &result);
/// Two-column (rho_max_km, improvement_pct) series; missing values print "null".
void write_plot_series(std::ostream &out, const harness::GoalSharingResult &result, bool success_curve);

struct RunManifest {
    std::string tool_version{kToolVersion};
    std::string command;
    LoadedConfig config;
    std::vector<std::uint64_t> seeds;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
};

nlohmann::json to_json(const RunManifest &manifest);
std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now());

} // namespace orbitsim::io
