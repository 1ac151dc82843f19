#include "orbitsim/io.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace orbitsim::io {

using nlohmann::json;

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Applies known keys of `section` through per-key setters; rejects the rest.
class SectionReader {
  public:
    SectionReader(const json &section, std::string prefix) : section_(section), prefix_(std::move(prefix)) {
        if (!section_.is_object()) throw ConfigError(prefix_ + ": expected an object", prefix_);
    }

    template <typename T> void field(const std::string &key, T &target) {
        known_.push_back(key);
        const auto it = section_.find(key);
        if (it == section_.end()) return;
        try {
            target = it->template get<T>();
        } catch (const json::exception &) {
            throw ConfigError(qualified(key) + ": wrong type", key);
        }
    }

    void custom(const std::string &key, const std::function<void(const json &)> &apply) {
        known_.push_back(key);
        const auto it = section_.find(key);
        if (it != section_.end()) apply(*it);
    }

    void finish() const {
        for (const auto &[key, value] : section_.items()) {
            if (std::find(known_.begin(), known_.end(), key) != known_.end()) continue;
            std::string msg = "unknown key '" + qualified(key) + "'";
            if (const auto s = suggest_key(key, known_)) msg += "; did you mean '" + *s + "'?";
            throw ConfigError(msg, key);
        }
    }

  private:
    std::string qualified(const std::string &key) const { return prefix_ + "." + key; }

    const json &section_;
    std::string prefix_;
    std::vector<std::string> known_;
};

template <typename F> auto string_field(const json &v, const char *key, F parse) {
    if (!v.is_string()) throw ConfigError(std::string(key) + ": expected a string", key);
    return parse(v.get<std::string>());
}

WorldConfig parse_world(const json &section) {
    DynamicsRegime regime = DynamicsRegime::cw;
    if (const auto it = section.find("regime"); it != section.end())
        regime = string_field(*it, "regime", [](const std::string &s) { return parse_regime(s); });
    WorldConfig c = regime == DynamicsRegime::ground ? WorldConfig::ground_defaults()
                                                     : WorldConfig::space_defaults(regime);

    SectionReader r(section, "world");
    r.custom("regime", [](const json &) {});
    r.field("env_half_width", c.env_half_width);
    r.field("n_agents", c.n_agents);
    r.field("n_obstacles", c.n_obstacles);
    r.field("sensing_radius", c.sensing_radius);
    r.field("dt", c.dt);
    r.field("max_steps", c.max_steps);
    r.custom("action_mode", [&](const json &v) {
        c.action_mode = string_field(v, "action_mode", [](const std::string &s) { return parse_action_mode(s); });
    });
    r.field("action_force", c.action_force);
    r.field("goal_reach_threshold", c.goal_reach_threshold);
    r.field("agent_radius", c.agent_radius);
    r.field("obstacle_radius", c.obstacle_radius);
    r.field("contact_gain", c.contact_gain);
    r.field("contact_margin", c.contact_margin);
    r.field("placement_margin", c.placement_margin);
    r.field("max_placement_attempts", c.max_placement_attempts);
    r.field("reward_collision", c.reward_collision);
    r.field("reward_goal", c.reward_goal);
    r.field("goal_sharing", c.goal_sharing);
    r.field("mass", c.mass);
    r.field("damping", c.damping);
    r.custom("omega_n", [&](const json &v) {
        if (v.is_null()) c.omega_n.reset();
        else if (v.is_number()) c.omega_n = v.get<double>();
        else throw ConfigError("world.omega_n: expected a number or null", "omega_n");
    });
    r.field("orbit_radius", c.orbit_radius);
    r.field("mu", c.mu);
    r.field("j2", c.j2);
    r.field("earth_radius", c.earth_radius);
    r.field("inclination_deg", c.inclination_deg);
    r.field("seed", c.seed);
    r.finish();
    c.validate();
    return c;
}

ExperimentSpec parse_experiment(const json &section) {
    ExperimentSpec e;
    SectionReader r(section, "experiment");
    r.field("policy", e.policy);
    r.field("episodes", e.episodes);
    r.field("jobs", e.jobs);
    r.field("train_sizes", e.train_sizes);
    r.field("test_sizes", e.test_sizes);
    r.field("inclinations_deg", e.inclinations_deg);
    r.field("inclination_runs", e.inclination_runs);
    r.field("rho_step", e.rho_step);
    r.field("rho_max", e.rho_max);
    r.field("instances", e.instances);
    r.finish();

    const auto need = [](bool ok, const char *key, const char *msg) {
        if (!ok) throw ConfigError(std::string("experiment.") + key + ": " + msg, key);
    };
    need(e.episodes >= 1, "episodes", "must be >= 1");
    need(e.jobs >= 1, "jobs", "must be >= 1");
    need(!e.train_sizes.empty(), "train_sizes", "must be non-empty");
    need(!e.test_sizes.empty() && std::all_of(e.test_sizes.begin(), e.test_sizes.end(), [](int m) { return m >= 1; }),
         "test_sizes", "must be non-empty and >= 1");
    need(!e.inclinations_deg.empty(), "inclinations_deg", "must be non-empty");
    need(e.inclination_runs >= 1, "inclination_runs", "must be >= 1");
    need(e.rho_step > 0.0, "rho_step", "must be > 0");
    need(e.rho_max >= 0.0, "rho_max", "must be >= 0");
    need(e.instances >= 1, "instances", "must be >= 1");
    return e;
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

} // namespace

std::optional<std::string> suggest_key(std::string_view unknown, std::span<const std::string> known) {
    std::optional<std::string> best;
    std::size_t best_d = 3;
    for (const auto &k : known) {
        const std::size_t d = edit_distance(unknown, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

LoadedConfig parse_config(const json &doc) {
    if (doc.is_null()) return parse_config(json::object());
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    LoadedConfig out;
    SectionReader top(doc, "config");
    top.custom("world", [&](const json &v) { out.world = parse_world(v); });
    top.custom("experiment", [&](const json &v) { out.experiment = parse_experiment(v); });
    top.finish();
    return out;
}

LoadedConfig parse_config_text(std::string_view text) {
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }))
        return parse_config(json::object());
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc);
}

LoadedConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path.string() + "'", "config");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

json to_json(const WorldConfig &c) {
    json j;
    j["regime"] = std::string(to_string(c.regime));
    j["env_half_width"] = c.env_half_width;
    j["n_agents"] = c.n_agents;
    j["n_obstacles"] = c.n_obstacles;
    j["sensing_radius"] = c.sensing_radius;
    j["dt"] = c.dt;
    j["max_steps"] = c.max_steps;
    j["action_mode"] = std::string(to_string(c.action_mode));
    j["action_force"] = c.action_force;
    j["goal_reach_threshold"] = c.goal_reach_threshold;
    j["agent_radius"] = c.agent_radius;
    j["obstacle_radius"] = c.obstacle_radius;
    j["contact_gain"] = c.contact_gain;
    j["contact_margin"] = c.contact_margin;
    j["placement_margin"] = c.placement_margin;
    j["max_placement_attempts"] = c.max_placement_attempts;
    j["reward_collision"] = c.reward_collision;
    j["reward_goal"] = c.reward_goal;
    j["goal_sharing"] = c.goal_sharing;
    j["mass"] = c.mass;
    j["damping"] = c.damping;
    j["omega_n"] = c.omega_n ? json(*c.omega_n) : json(nullptr);
    j["orbit_radius"] = c.orbit_radius;
    j["mu"] = c.mu;
    j["j2"] = c.j2;
    j["earth_radius"] = c.earth_radius;
    j["inclination_deg"] = c.inclination_deg;
    j["seed"] = c.seed;
    return j;
}

json to_json(const ExperimentSpec &e) {
    return json{{"policy", e.policy},
                {"episodes", e.episodes},
                {"jobs", e.jobs},
                {"train_sizes", e.train_sizes},
                {"test_sizes", e.test_sizes},
                {"inclinations_deg", e.inclinations_deg},
                {"inclination_runs", e.inclination_runs},
                {"rho_step", e.rho_step},
                {"rho_max", e.rho_max},
                {"instances", e.instances}};
}

json to_json(const LoadedConfig &c) { return json{{"world", to_json(c.world)}, {"experiment", to_json(c.experiment)}}; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trajectory_line(const TrajectoryRecord &r) {
    std::string s;
    s.reserve(200);
    s += "{\"step\":" + std::to_string(r.step);
    s += ",\"id\":" + std::to_string(r.id);
    s += ",\"kind\":\"" + std::string(to_string(r.kind)) + "\"";
    s += ",\"position\":[" + format_double(r.position.x) + "," + format_double(r.position.y) + "]";
    s += ",\"velocity\":[" + format_double(r.velocity.x) + "," + format_double(r.velocity.y) + "]";
    s += ",\"reward\":" + format_double(r.reward);
    s += ",\"collision\":";
    s += r.collision ? "true" : "false";
    s += "}";
    return s;
}

std::string episode_line(const harness::EpisodeRecord &r) {
    const auto &m = r.metrics;
    const auto doubles = [](const std::vector<double> &v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
        return s + "]";
    };
    std::string s = "{\"params\":{";
    for (std::size_t i = 0; i < r.params.size(); ++i)
        s += (i ? "," : "") + json_string(r.params[i].first) + ":" + format_double(r.params[i].second);
    s += "}";
    if (!r.arm.empty()) s += ",\"arm\":" + json_string(r.arm);
    s += ",\"instance\":" + std::to_string(r.instance);
    s += ",\"seed\":" + std::to_string(r.seed);
    s += ",\"total_reward\":" + format_double(m.total_reward);
    s += ",\"reward_per_agent\":" + format_double(m.reward_per_agent);
    s += ",\"T\":" + format_double(m.time_fraction);
    s += ",\"agent_T\":" + doubles(m.agent_time_fraction);
    s += ",\"collision_events\":" + std::to_string(m.collision_events);
    s += ",\"agent_collisions\":[";
    for (std::size_t i = 0; i < m.agent_collisions.size(); ++i)
        s += (i ? "," : "") + std::to_string(m.agent_collisions[i]);
    s += "],\"collisions_per_agent\":" + format_double(m.collisions_per_agent);
    s += ",\"success\":";
    s += m.success ? "true" : "false";
    s += ",\"connectivity\":" + doubles(m.connectivity);
    s += ",\"reset_agent\":" + (m.reset_agent ? std::to_string(*m.reset_agent) : std::string("null"));
    s += "}";
    return s;
}

void write_sweep_csv(std::ostream &out, const harness::SweepResult &result) {
    for (const auto &name : result.param_names) out << name << ',';
    out << "episodes,total_reward,total_reward_std,reward_per_agent,reward_per_agent_std,T,T_std,"
           "col_per_agent,col_per_agent_std,S_pct,median_col,connectivity\n";
    for (const auto &c : result.cells) {
        for (const auto &p : c.params) out << format_double(p.second) << ',';
        out << c.episodes << ',' << format_double(c.total_reward) << ',' << format_double(c.total_reward_std) << ','
            << format_double(c.reward_per_agent) << ',' << format_double(c.reward_per_agent_std) << ','
            << format_double(c.time_fraction) << ',' << format_double(c.time_fraction_std) << ','
            << format_double(c.collisions_per_agent) << ',' << format_double(c.collisions_per_agent_std) << ','
            << format_double(c.success_pct) << ',' << format_double(c.median_collisions) << ','
            << format_double(c.connectivity) << '\n';
    }
}

namespace {
std::string opt(const std::optional<double> &v) { return v ? format_double(*v) : "null"; }
} // namespace

void write_goal_sharing_csv(std::ostream &out, const harness::GoalSharingResult &result) {
    out << "rho_max_km,instances,S_share,S_hide,T_share,T_hide,improvement_S_pct,improvement_T_pct,"
           "improvement_S_pct_smoothed,improvement_T_pct_smoothed,median_col_share,median_col_hide\n";
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const auto &p = result.points[i];
        out << format_double(p.rho_max) << ',' << p.instances << ',' << format_double(p.success_share) << ','
            << format_double(p.success_hide) << ',' << format_double(p.time_share) << ','
            << format_double(p.time_hide) << ',' << opt(p.improvement_success_pct) << ','
            << opt(p.improvement_time_pct) << ',' << opt(result.smoothed_success.at(i)) << ','
            << opt(result.smoothed_time.at(i)) << ',' << format_double(p.median_collisions_share) << ','
            << format_double(p.median_collisions_hide) << '\n';
    }
}

void write_plot_series(std::ostream &out, const harness::GoalSharingResult &result, bool success_curve) {
    const auto &series = success_curve ? result.smoothed_success : result.smoothed_time;
    out << "rho_max_km,improvement_pct\n";
    for (std::size_t i = 0; i < result.points.size(); ++i)
        out << format_double(result.points[i].rho_max) << ',' << opt(series.at(i)) << '\n';
}

json to_json(const RunManifest &m) {
    return json{{"tool_version", m.tool_version},
                {"command", m.command},
                {"config", to_json(m.config)},
                {"seeds", m.seeds},
                {"started_at", m.started_at},
                {"finished_at", m.finished_at},
                {"outputs", m.outputs},
                {"csv_schema", m.command == "goal-sharing" ? kGoalSharingCsvSchema : kSweepCsvSchema}};
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace orbitsim::io
