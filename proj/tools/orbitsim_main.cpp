// orbitsim command-line front end.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 simulation error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "orbitsim/harness.hpp"
#include "orbitsim/io.hpp"
#include "orbitsim/validation.hpp"

namespace fs = std::filesystem;
using namespace orbitsim;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::optional<std::string> policy;
    std::string out_dir = "orbitsim_out";
    std::optional<int> jobs;
    bool goal_hiding = false;
    bool plot_data = false;
};

void add_common(CLI::App *cmd, Flags &f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--seed", f.seed, "base seed (default: $ORBITSIM_SEED, then config)");
    cmd->add_option("--episodes", f.episodes, "episodes per cell (instances per rho for goal-sharing)");
    cmd->add_option("--policy", f.policy, "greedy | potential | potential+intent | random");
    cmd->add_option("--out-dir", f.out_dir, "output directory");
    cmd->add_option("--jobs", f.jobs, "worker threads");
    cmd->add_flag("--goal-hiding", f.goal_hiding, "hide other agents' goals in observation graphs");
}

std::uint64_t parse_seed_env(const char *text) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used == std::string(text).size()) return v;
    } catch (const std::exception &) {
    }
    throw ConfigError(std::string("ORBITSIM_SEED: not an unsigned integer: '") + text + "'", "ORBITSIM_SEED");
}

io::LoadedConfig resolve(const Flags &f) {
    io::LoadedConfig c = f.config.empty() ? io::LoadedConfig{} : io::load_config(f.config);
    if (f.seed) c.world.seed = *f.seed;
    else if (const char *env = std::getenv("ORBITSIM_SEED")) c.world.seed = parse_seed_env(env);
    if (f.episodes) c.experiment.episodes = c.experiment.instances = *f.episodes;
    if (f.policy) c.experiment.policy = *f.policy;
    if (f.jobs) c.experiment.jobs = *f.jobs;
    if (f.goal_hiding) c.world.goal_sharing = false;
    if (c.experiment.episodes < 1) throw ConfigError("episodes: must be >= 1", "episodes");
    if (c.experiment.jobs < 1) throw ConfigError("jobs: must be >= 1", "jobs");
    c.world.validate();
    return c;
}

std::ofstream open_out(const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_records(const fs::path &path, const std::vector<harness::EpisodeRecord> &records) {
    auto out = open_out(path);
    for (const auto &r : records) out << io::episode_line(r) << '\n';
}

void write_manifest(const fs::path &dir, io::RunManifest m, const std::vector<harness::EpisodeRecord> &records) {
    for (const auto &r : records) m.seeds.push_back(r.seed);
    m.finished_at = io::utc_timestamp();
    auto out = open_out(dir / "manifest.json");
    out << io::to_json(m).dump(2) << '\n';
}

harness::RunOptions run_options(const io::LoadedConfig &c) {
    harness::RunOptions o;
    o.base_seed = c.world.seed;
    o.jobs = c.experiment.jobs;
    return o;
}

void print_cells(const harness::SweepResult &r) {
    for (const auto &c : r.cells) {
        for (const auto &[name, value] : c.params) std::cout << name << '=' << value << ' ';
        std::cout << "reward/m=" << c.reward_per_agent << " T=" << c.time_fraction
                  << " col/m=" << c.collisions_per_agent << " S%=" << c.success_pct << '\n';
    }
}

int cmd_run(const Flags &f) {
    const auto c = resolve(f);
    const fs::path dir = f.out_dir;
    fs::create_directories(dir);
    io::RunManifest manifest{.command = "run", .config = c, .started_at = io::utc_timestamp()};

    harness::EpisodeOptions opts;
    auto traj = open_out(dir / "trajectory.jsonl");
    opts.trajectory = [&traj](const TrajectoryRecord &r) { traj << io::trajectory_line(r) << '\n'; };
    const auto policies = harness::named_policy(c.experiment.policy)(c.world, 0);

    harness::EpisodeRecord rec;
    rec.seed = c.world.seed;
    rec.metrics = harness::run_episode(c.world, policies, rec.seed, opts);
    traj.close();
    write_records(dir / "episodes.jsonl", {rec});
    manifest.outputs = {"trajectory.jsonl", "episodes.jsonl", "manifest.json"};
    write_manifest(dir, manifest, {rec});

    const auto &m = rec.metrics;
    std::cout << "total_reward=" << m.total_reward << " T=" << m.time_fraction
              << " collisions=" << m.collision_events << " success=" << (m.success ? "true" : "false") << '\n';
    return 0;
}

int cmd_scalability(const Flags &f) {
    const auto c = resolve(f);
    const fs::path dir = f.out_dir;
    fs::create_directories(dir);
    io::RunManifest manifest{.command = "scalability", .config = c, .started_at = io::utc_timestamp()};
    harness::ScalabilitySpec spec{c.experiment.train_sizes, c.experiment.test_sizes, c.experiment.episodes};
    const auto result =
        harness::run_scalability(c.world, spec, harness::named_policy(c.experiment.policy), run_options(c));
    auto csv = open_out(dir / "sweep.csv");
    io::write_sweep_csv(csv, result);
    write_records(dir / "episodes.jsonl", result.records);
    manifest.outputs = {"sweep.csv", "episodes.jsonl", "manifest.json"};
    write_manifest(dir, manifest, result.records);
    print_cells(result);
    return 0;
}

int cmd_inclination(const Flags &f) {
    auto c = resolve(f);
    if (c.world.regime == DynamicsRegime::ground)
        throw ConfigError("regime: the inclination sweep needs a space regime", "regime");
    c.world.regime = DynamicsRegime::cw_j2;
    const fs::path dir = f.out_dir;
    fs::create_directories(dir);
    io::RunManifest manifest{.command = "inclination", .config = c, .started_at = io::utc_timestamp()};
    harness::InclinationSpec spec{c.experiment.inclinations_deg, c.experiment.inclination_runs};
    if (f.episodes) spec.runs = *f.episodes;
    const auto result =
        harness::run_inclination_sweep(c.world, spec, harness::named_policy(c.experiment.policy), run_options(c));
    auto csv = open_out(dir / "sweep.csv");
    io::write_sweep_csv(csv, result);
    write_records(dir / "episodes.jsonl", result.records);
    manifest.outputs = {"sweep.csv", "episodes.jsonl", "manifest.json"};
    write_manifest(dir, manifest, result.records);
    for (const auto &cell : result.cells)
        std::cout << "inclination_deg=" << cell.params.front().second << " reward=" << cell.total_reward
                  << " std=" << cell.total_reward_std << '\n';
    return 0;
}

int cmd_goal_sharing(const Flags &f) {
    const auto c = resolve(f);
    const fs::path dir = f.out_dir;
    fs::create_directories(dir);
    io::RunManifest manifest{.command = "goal-sharing", .config = c, .started_at = io::utc_timestamp()};
    harness::GoalSharingSpec spec{c.experiment.rho_step, c.experiment.rho_max, c.experiment.instances};
    const auto result =
        harness::run_goal_sharing_sweep(c.world, spec, harness::named_policy(c.experiment.policy), run_options(c));
    auto csv = open_out(dir / "sweep.csv");
    io::write_goal_sharing_csv(csv, result);
    write_records(dir / "episodes.jsonl", result.records);
    manifest.outputs = {"sweep.csv", "episodes.jsonl", "manifest.json"};
    if (f.plot_data) {
        auto s = open_out(dir / "improvement_S.csv");
        io::write_plot_series(s, result, true);
        auto t = open_out(dir / "improvement_T.csv");
        io::write_plot_series(t, result, false);
        manifest.outputs.insert(manifest.outputs.end(), {"improvement_S.csv", "improvement_T.csv"});
    }
    write_manifest(dir, manifest, result.records);
    for (const auto &p : result.points)
        std::cout << "rho_max=" << p.rho_max << " S_share=" << p.success_share << " S_hide=" << p.success_hide
                  << " T_share=" << p.time_share << " T_hide=" << p.time_hide << '\n';
    return 0;
}

int cmd_validate(const Flags &f) {
    const auto c = resolve(f);
    const auto report = validation::validate_dynamics(c.world.seed);
    validation::print(std::cout, report);
    return report.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"orbitsim: multi-agent relative-motion simulation and experiment harness"};
    app.set_version_flag("--version", std::string(io::kToolVersion));
    app.require_subcommand(1);

    Flags flags;
    auto *run = app.add_subcommand("run", "single episode; writes trajectory.jsonl");
    auto *scal = app.add_subcommand("scalability", "train-size x test-size grid");
    auto *incl = app.add_subcommand("inclination", "J2 inclination sensitivity sweep");
    auto *goal = app.add_subcommand("goal-sharing", "paired goal-sharing vs goal-hiding sweep");
    auto *valid = app.add_subcommand("validate-dynamics", "integrator vs analytic oracle checks");
    for (auto *cmd : {run, scal, incl, goal, valid}) add_common(cmd, flags);
    goal->add_flag("--plot-data", flags.plot_data, "also write smoothed improvement series");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(flags);
        if (*scal) return cmd_scalability(flags);
        if (*incl) return cmd_inclination(flags);
        if (*goal) return cmd_goal_sharing(flags);
        if (*valid) return cmd_validate(flags);
    } catch (const ConfigError &e) {
        std::cerr << "orbitsim: configuration error: " << e.what() << '\n';
        return 1;
    } catch (const PlacementError &e) {
        std::cerr << "orbitsim: configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "orbitsim: simulation error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
