// Python extension: thin wrappers over the orbitsim core.
//
// Configs cross the boundary as JSON text (the Python package converts dicts);
// observation graphs cross as numpy buffers in the documented flat layout.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "orbitsim/harness.hpp"
#include "orbitsim/io.hpp"
#include "orbitsim/validation.hpp"

namespace py = pybind11;
using namespace orbitsim;

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace {

constexpr int kAbiVersion = 1;

io::LoadedConfig load(const std::string &json_text) { return io::parse_config_text(json_text); }

py::array_t<double> state_array(const dynamics::State2D &s) {
    py::array_t<double> out(4);
    auto r = out.mutable_unchecked<1>();
    r(0) = s.position.x;
    r(1) = s.position.y;
    r(2) = s.velocity.x;
    r(3) = s.velocity.y;
    return out;
}

dynamics::State2D state_from(const std::vector<double> &v) {
    if (v.size() != 4) throw py::value_error("state must be [x, y, vx, vy]");
    return {{v[0], v[1]}, {v[2], v[3]}};
}

Vec2 vec_from(const std::vector<double> &v) {
    if (v.size() != 2) throw py::value_error("vector must have 2 components");
    return {v[0], v[1]};
}

py::dict graph_dict(const obsgraph::ObservationGraph &g) {
    const auto flat = obsgraph::serialize(g);
    const auto rows = static_cast<py::ssize_t>(flat.num_nodes());
    const auto edges = static_cast<py::ssize_t>(flat.num_edges());
    py::array_t<double> features({rows, static_cast<py::ssize_t>(flat.feature_dim)});
    std::copy(flat.features.begin(), flat.features.end(), features.mutable_data());
    py::array_t<std::int64_t> edge_index({py::ssize_t{2}, edges});
    std::copy(flat.edge_index.begin(), flat.edge_index.end(), edge_index.mutable_data());
    py::array_t<std::int64_t> node_ids(rows);
    std::copy(flat.node_ids.begin(), flat.node_ids.end(), node_ids.mutable_data());
    py::dict d;
    d["center"] = flat.center;
    d["goal_sharing"] = flat.goal_sharing;
    d["node_ids"] = node_ids;
    d["features"] = features;
    d["edge_index"] = edge_index;
    return d;
}

obsgraph::ObservationGraph graph_from_dict(const py::dict &d) {
    obsgraph::SerializedGraph flat;
    flat.center = d["center"].cast<std::int64_t>();
    flat.goal_sharing = d["goal_sharing"].cast<bool>();
    const auto features = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(d["features"]);
    const auto edge_index = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>::ensure(d["edge_index"]);
    const auto node_ids = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>::ensure(d["node_ids"]);
    if (!features || features.ndim() != 2 || !edge_index || edge_index.ndim() != 2 || edge_index.shape(0) != 2 ||
        !node_ids)
        throw py::value_error("graph: expected features (N, F), edge_index (2, E), node_ids (N,)");
    flat.feature_dim = static_cast<int>(features.shape(1));
    flat.features.assign(features.data(), features.data() + features.size());
    flat.edge_index.assign(edge_index.data(), edge_index.data() + edge_index.size());
    flat.node_ids.assign(node_ids.data(), node_ids.data() + node_ids.size());
    try {
        return obsgraph::deserialize(flat);
    } catch (const std::invalid_argument &e) {
        throw py::value_error(e.what());
    }
}

py::dict observation_dict(const obsgraph::LocalObservation &o) {
    py::dict d;
    d["position"] = py::make_tuple(o.position.x, o.position.y);
    d["velocity"] = py::make_tuple(o.velocity.x, o.velocity.y);
    d["rel_goal"] = py::make_tuple(o.rel_goal.x, o.rel_goal.y);
    return d;
}

AgentAction action_from(const py::handle &h) {
    if (py::isinstance<py::int_>(h)) return AgentAction::discrete(h.cast<int>());
    const auto v = h.cast<std::vector<double>>();
    return AgentAction::continuous(vec_from(v));
}

py::dict metrics_dict(const harness::EpisodeMetrics &m) {
    py::dict d;
    d["total_reward"] = m.total_reward;
    d["reward_per_agent"] = m.reward_per_agent;
    d["agent_time_fraction"] = m.agent_time_fraction;
    d["time_fraction"] = m.time_fraction;
    d["collision_events"] = m.collision_events;
    d["agent_collisions"] = m.agent_collisions;
    d["collisions_per_agent"] = m.collisions_per_agent;
    d["success"] = m.success;
    d["connectivity"] = m.connectivity;
    d["reset_agent"] = m.reset_agent ? py::cast(*m.reset_agent) : py::none();
    return d;
}

py::dict cell_dict(const harness::CellAggregate &c) {
    py::dict d;
    for (const auto &[k, v] : c.params) d[py::str(k)] = v;
    if (!c.arm.empty()) d["arm"] = c.arm;
    d["episodes"] = c.episodes;
    d["total_reward"] = c.total_reward;
    d["total_reward_std"] = c.total_reward_std;
    d["reward_per_agent"] = c.reward_per_agent;
    d["reward_per_agent_std"] = c.reward_per_agent_std;
    d["time_fraction"] = c.time_fraction;
    d["time_fraction_std"] = c.time_fraction_std;
    d["collisions_per_agent"] = c.collisions_per_agent;
    d["collisions_per_agent_std"] = c.collisions_per_agent_std;
    d["success_pct"] = c.success_pct;
    d["median_collisions"] = c.median_collisions;
    d["connectivity"] = c.connectivity;
    return d;
}

py::list records_list(const std::vector<harness::EpisodeRecord> &records) {
    py::list out;
    for (const auto &r : records) {
        py::dict d;
        for (const auto &[k, v] : r.params) d[py::str(k)] = v;
        if (!r.arm.empty()) d["arm"] = r.arm;
        d["instance"] = r.instance;
        d["seed"] = r.seed;
        d["metrics"] = metrics_dict(r.metrics);
        out.append(d);
    }
    return out;
}

// Adapts a Python callable(observation: dict, graph: dict) -> action.
class CallbackPolicy final : public policy::Policy {
  public:
    explicit CallbackPolicy(py::function fn) : fn_(std::move(fn)) {}
    ~CallbackPolicy() override {
        py::gil_scoped_acquire gil;
        fn_ = py::function();
    }
    AgentAction act(const obsgraph::LocalObservation &obs, const obsgraph::ObservationGraph &graph,
                    Rng &) const override {
        py::gil_scoped_acquire gil;
        return action_from(fn_(observation_dict(obs), graph_dict(graph)));
    }
    std::string name() const override { return "external"; }

  private:
    py::function fn_;
};

// A policy is a baseline name or a Python callable. Callables force a single
// worker: every call takes the interpreter lock anyway.
struct PolicyArg {
    harness::PolicyProvider provider;
    bool external = false;
};

PolicyArg policy_arg(const py::object &policy) {
    if (py::isinstance<py::str>(policy)) return {harness::named_policy(policy.cast<std::string>()), false};
    if (!PyCallable_Check(policy.ptr())) throw py::type_error("policy must be a baseline name or a callable");
    auto shared = std::make_shared<CallbackPolicy>(policy.cast<py::function>());
    return {[shared](const WorldConfig &, int) -> harness::PolicySet { return {shared}; }, true};
}

harness::RunOptions run_options(std::uint64_t seed, int jobs, const PolicyArg &p) {
    harness::RunOptions o;
    o.base_seed = seed;
    o.jobs = p.external ? 1 : jobs;
    return o;
}

// Python-side world handle.
class PyWorld {
  public:
    PyWorld(const std::string &config_json, std::uint64_t seed)
        : world_(World::generate(load(config_json).world, seed)) {}

    py::dict step(const py::sequence &actions) {
        std::vector<AgentAction> acts;
        for (const auto &a : actions) acts.push_back(action_from(a));
        const StepOutcome out = world_.step(acts);
        py::dict d;
        d["rewards"] = out.rewards;
        d["collision_onsets"] = out.collision_onsets;
        d["colliding"] = std::vector<bool>(out.colliding.begin(), out.colliding.end());
        d["at_goal"] = std::vector<bool>(out.at_goal.begin(), out.at_goal.end());
        d["joint_reward"] = out.joint_reward;
        d["done"] = out.done;
        return d;
    }

    py::dict entities() const {
        const auto es = world_.entities();
        const auto n = static_cast<py::ssize_t>(es.size());
        py::array_t<double> pos({n, py::ssize_t{2}}), vel({n, py::ssize_t{2}});
        py::array_t<double> radius(n);
        py::list kinds;
        auto p = pos.mutable_unchecked<2>();
        auto v = vel.mutable_unchecked<2>();
        auto r = radius.mutable_unchecked<1>();
        for (py::ssize_t i = 0; i < n; ++i) {
            const Entity &e = es[static_cast<std::size_t>(i)];
            p(i, 0) = e.state.position.x;
            p(i, 1) = e.state.position.y;
            v(i, 0) = e.state.velocity.x;
            v(i, 1) = e.state.velocity.y;
            r(i) = e.radius;
            kinds.append(std::string(to_string(e.kind)));
        }
        py::dict d;
        d["position"] = pos;
        d["velocity"] = vel;
        d["radius"] = radius;
        d["kind"] = kinds;
        return d;
    }

    py::dict graph(EntityId agent, std::optional<bool> goal_sharing) const {
        check_agent(agent);
        return graph_dict(obsgraph::build_graph(world_, agent, goal_sharing.value_or(world_.config().goal_sharing)));
    }

    py::dict observation(EntityId agent) const {
        check_agent(agent);
        return observation_dict(obsgraph::local_observation(world_, agent));
    }

    void reset_goal(EntityId agent, double rho_max) {
        check_agent(agent);
        world_.reset_goal(agent, rho_max, world_.rng());
    }

    void teleport_agent(EntityId agent, const std::vector<double> &state) {
        check_agent(agent);
        world_.teleport_agent(agent, state_from(state));
    }

    std::vector<std::optional<int>> first_reach_steps() const {
        std::vector<std::optional<int>> out;
        for (EntityId i = 0; i < world_.n_agents(); ++i) out.push_back(world_.first_reach_step(i));
        return out;
    }

    std::vector<int> collision_tally() const {
        std::vector<int> out;
        for (EntityId i = 0; i < world_.n_agents(); ++i) out.push_back(world_.collision_tally(i));
        return out;
    }

    const World &world() const { return world_; }

  private:
    void check_agent(EntityId agent) const {
        if (!world_.is_agent(agent)) throw py::index_error("agent id out of range: " + std::to_string(agent));
    }

    World world_;
};

template <typename Fn> auto without_gil(bool external, Fn &&fn) {
    if (external) return fn();
    py::gil_scoped_release release;
    return fn();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "orbitsim core: dynamics, world, observation graphs, baselines and experiment protocols";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PlacementError>(m, "PlacementError", PyExc_RuntimeError);
    py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);
    py::register_exception<dynamics::InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);

    m.attr("ABI_VERSION") = kAbiVersion;
    m.attr("FEATURE_DIM_SHARING") = obsgraph::kFeatureDimSharing;
    m.attr("FEATURE_DIM_HIDING") = obsgraph::kFeatureDimHiding;
    m.attr("CRITICAL_INCLINATION_RAD") = dynamics::kCriticalInclinationRad;
    m.attr("POLICIES") = policy::policy_names();

    // -- dynamics
    m.def("mean_motion_for_radius", &dynamics::mean_motion_for_radius, py::arg("orbit_radius_km"),
          py::arg("mu") = dynamics::constants::kMuKm3PerS2);
    m.def(
        "c_param",
        [](double inclination_rad, double j2, double earth_radius, double orbit_radius) {
            const auto cp = dynamics::c_param(inclination_rad, j2, earth_radius, orbit_radius);
            return py::make_tuple(cp.s, cp.c);
        },
        "(s, c) for an inclination in radians", py::arg("inclination_rad"), py::arg("j2") = dynamics::constants::kJ2,
        py::arg("earth_radius_km") = dynamics::constants::kEarthRadiusKm,
        py::arg("orbit_radius_km") = dynamics::constants::kDefaultOrbitRadiusKm);
    m.def(
        "cw_closed_form",
        [](const std::vector<double> &s, double n, double t) {
            return state_array(dynamics::cw_closed_form(state_from(s), n, t));
        },
        py::arg("state"), py::arg("mean_motion"), py::arg("t"));
    m.def(
        "ground_closed_form",
        [](const std::vector<double> &s, const std::vector<double> &f, double mass, double damping, double t) {
            return state_array(dynamics::ground_closed_form(state_from(s), vec_from(f), {mass, damping}, t));
        },
        py::arg("state"), py::arg("force"), py::arg("mass") = 1.0, py::arg("damping") = 0.25, py::arg("t"));
    m.def(
        "propagate",
        [](const std::string &config, const std::vector<double> &s, const std::vector<double> &f, int steps) {
            const WorldConfig c = load(config).world;
            const auto model = c.model();
            auto state = state_from(s);
            for (int i = 0; i < steps; ++i) state = dynamics::rk4_step(model, state, vec_from(f), c.dt);
            return state_array(state);
        },
        "RK4 steps of the config's dynamics (dt from the config) under a constant total force",
        py::arg("config"), py::arg("state"), py::arg("force"), py::arg("steps") = 1);
    m.def("validate_dynamics", [](std::uint64_t seed) {
        const auto r = validation::validate_dynamics(seed);
        py::dict d;
        d["cw_oracle_max_rel_error"] = r.cw_oracle_max_rel_error;
        d["ellipse_return_rel_error"] = r.ellipse_return_rel_error;
        d["j2_reduction_max_ulp"] = r.j2_reduction_max_ulp;
        d["ground_oracle_max_rel_error"] = r.ground_oracle_max_rel_error;
        d["critical_c_error"] = r.critical_c_error;
        d["passed"] = r.passed();
        return d;
    }, py::arg("seed") = 0);

    // -- config
    m.def(
        "normalize_config", [](const std::string &text) { return io::to_json(load(text)).dump(); },
        "Parses, validates and returns the fully populated config as JSON text", py::arg("config") = "");

    // -- world and observations
    py::class_<PyWorld>(m, "World")
        .def(py::init<const std::string &, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
        .def("step", &PyWorld::step, py::arg("actions"))
        .def("entities", &PyWorld::entities)
        .def("graph", &PyWorld::graph, py::arg("agent"), py::arg("goal_sharing") = py::none())
        .def("observation", &PyWorld::observation, py::arg("agent"))
        .def("reset_goal", &PyWorld::reset_goal, py::arg("agent"), py::arg("rho_max"))
        .def("teleport_agent", &PyWorld::teleport_agent, py::arg("agent"), py::arg("state"))
        .def("first_reach_steps", &PyWorld::first_reach_steps)
        .def("collision_tally", &PyWorld::collision_tally)
        .def_property_readonly("n_agents", [](const PyWorld &w) { return w.world().n_agents(); })
        .def_property_readonly("step_index", [](const PyWorld &w) { return w.world().step_index(); })
        .def_property_readonly("done", [](const PyWorld &w) { return w.world().done(); })
        .def_property_readonly("collision_events", [](const PyWorld &w) { return w.world().collision_events(); })
        .def_property_readonly("config", [](const PyWorld &w) { return io::to_json(w.world().config()).dump(); });

    m.def("graph_roundtrip", [](const py::dict &g) { return graph_dict(graph_from_dict(g)); },
          "Validates a flat graph and re-serializes it", py::arg("graph"));

    // -- baselines
    m.def(
        "baseline_action",
        [](const std::string &name, const PyWorld &w, EntityId agent, std::uint64_t stream_seed) {
            const auto p = policy::make_policy(name, w.world().config());
            Rng rng(stream_seed);
            const auto a = p->act(obsgraph::local_observation(w.world(), agent),
                                  obsgraph::build_graph(w.world(), agent, w.world().config().goal_sharing), rng);
            if (const int *k = std::get_if<int>(&a.value)) return py::object(py::int_(*k));
            const Vec2 f = std::get<Vec2>(a.value);
            return py::object(py::make_tuple(f.x, f.y));
        },
        py::arg("policy"), py::arg("world"), py::arg("agent"), py::arg("stream_seed") = 0);

    // -- harness
    m.def(
        "run_episode",
        [](const std::string &config, const py::object &policy, std::uint64_t seed, std::optional<double> rho) {
            const WorldConfig c = load(config).world;
            const PolicyArg p = policy_arg(policy);
            const auto set = p.provider(c, 0);
            harness::EpisodeOptions o;
            o.goal_reset_rho = rho;
            return metrics_dict(without_gil(p.external, [&] { return harness::run_episode(c, set, seed, o); }));
        },
        py::arg("config"), py::arg("policy"), py::arg("seed") = 0, py::arg("goal_reset_rho") = py::none());
    m.def(
        "run_scalability",
        [](const std::string &config, const py::object &policy, std::uint64_t seed, int jobs) {
            const auto lc = load(config);
            const PolicyArg p = policy_arg(policy);
            harness::ScalabilitySpec spec{lc.experiment.train_sizes, lc.experiment.test_sizes, lc.experiment.episodes};
            const auto r = without_gil(p.external, [&] {
                return harness::run_scalability(lc.world, spec, p.provider, run_options(seed, jobs, p));
            });
            py::list cells;
            for (const auto &c : r.cells) cells.append(cell_dict(c));
            return py::make_tuple(cells, records_list(r.records));
        },
        py::arg("config"), py::arg("policy"), py::arg("seed") = 0, py::arg("jobs") = 1);
    m.def(
        "run_inclination_sweep",
        [](const std::string &config, const py::object &policy, std::uint64_t seed, int jobs) {
            auto lc = load(config);
            lc.world.regime = DynamicsRegime::cw_j2;
            const PolicyArg p = policy_arg(policy);
            harness::InclinationSpec spec{lc.experiment.inclinations_deg, lc.experiment.inclination_runs};
            const auto r = without_gil(p.external, [&] {
                return harness::run_inclination_sweep(lc.world, spec, p.provider, run_options(seed, jobs, p));
            });
            py::list cells;
            for (const auto &c : r.cells) cells.append(cell_dict(c));
            return py::make_tuple(cells, records_list(r.records));
        },
        py::arg("config"), py::arg("policy"), py::arg("seed") = 0, py::arg("jobs") = 1);
    m.def(
        "run_goal_sharing_sweep",
        [](const std::string &config, const py::object &policy, std::uint64_t seed, int jobs) {
            const auto lc = load(config);
            const PolicyArg p = policy_arg(policy);
            harness::GoalSharingSpec spec{lc.experiment.rho_step, lc.experiment.rho_max, lc.experiment.instances};
            const auto r = without_gil(p.external, [&] {
                return harness::run_goal_sharing_sweep(lc.world, spec, p.provider, run_options(seed, jobs, p));
            });
            py::list points;
            for (std::size_t i = 0; i < r.points.size(); ++i) {
                const auto &pt = r.points[i];
                py::dict d;
                d["rho_max_km"] = pt.rho_max;
                d["instances"] = pt.instances;
                d["success_share"] = pt.success_share;
                d["success_hide"] = pt.success_hide;
                d["time_share"] = pt.time_share;
                d["time_hide"] = pt.time_hide;
                d["improvement_success_pct"] = pt.improvement_success_pct;
                d["improvement_time_pct"] = pt.improvement_time_pct;
                d["improvement_success_pct_smoothed"] = r.smoothed_success[i];
                d["improvement_time_pct_smoothed"] = r.smoothed_time[i];
                d["median_collisions_share"] = pt.median_collisions_share;
                d["median_collisions_hide"] = pt.median_collisions_hide;
                points.append(d);
            }
            return py::make_tuple(points, records_list(r.records));
        },
        py::arg("config"), py::arg("policy"), py::arg("seed") = 0, py::arg("jobs") = 1);
    m.def("moving_average",
          [](const std::vector<std::optional<double>> &series, int window) {
              return harness::moving_average(std::span<const std::optional<double>>(series), window);
          },
          py::arg("series"), py::arg("window") = harness::kMovingAverageWindow);

#ifdef VERSION_INFO
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = std::string(io::kToolVersion);
#endif
}
