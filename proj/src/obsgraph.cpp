#include "orbitsim/obsgraph.hpp"

#include <algorithm>
#include <stdexcept>

namespace orbitsim::obsgraph {

const GraphNode *ObservationGraph::find(EntityId id) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                     [](const GraphNode &n, EntityId v) { return n.id < v; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
}

bool ObservationGraph::has_incident_edge(EntityId id) const {
    return std::any_of(edges.begin(), edges.end(), [id](const Edge &e) { return e.src == id || e.dst == id; });
}

std::vector<EntityId> ObservationGraph::in_neighbors() const {
    std::vector<EntityId> out;
    for (const Edge &e : edges)
        if (e.dst == center) out.push_back(e.src);
    return out;
}

ObservationGraph build_graph(const World &world, EntityId agent, bool goal_sharing) {
    const Entity &self = world.entity(agent);
    if (self.kind != EntityKind::agent) throw std::out_of_range("build_graph: entity is not an agent");
    const double d = world.config().sensing_radius;
    const auto entities = world.entities();

    const auto within = [d](const Entity &a, const Entity &b) {
        return norm(a.state.position - b.state.position) <= d;
    };

    std::vector<const Entity *> members;
    for (const Entity &e : entities) {
        if (e.kind == EntityKind::agent) {
            members.push_back(&e);
            continue;
        }
        for (const Entity &a : entities)
            if (a.kind == EntityKind::agent && within(a, e)) {
                members.push_back(&e);
                break;
            }
    }
    std::sort(members.begin(), members.end(), [](const Entity *a, const Entity *b) { return a->id < b->id; });

    ObservationGraph g;
    g.center = agent;
    g.goal_sharing = goal_sharing;
    const Vec2 p0 = self.state.position;
    const Vec2 v0 = self.state.velocity;
    for (const Entity *e : members) {
        NodeFeature f;
        f.kind = e->kind;
        f.rel_position = e->state.position - p0;
        f.rel_velocity = e->state.velocity - v0;
        if (e->kind == EntityKind::agent) {
            if (goal_sharing) f.rel_goal = world.goal_of(e->id).state.position - p0;
        } else {
            f.rel_goal = f.rel_position;
        }
        g.nodes.push_back({e->id, f});
    }

    for (const Entity *u : members)
        for (const Entity *v : members) {
            if (u == v || !within(*u, *v)) continue;
            // agent-agent pairs appear in both orders; non-agent sources only feed agents
            if (v->kind == EntityKind::agent) g.edges.push_back({u->id, v->id});
        }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

LocalObservation local_observation(const World &world, EntityId agent) {
    const Entity &self = world.entity(agent);
    return {self.state.position, self.state.velocity, world.goal_of(agent).state.position - self.state.position};
}

std::vector<double> connectivity_fraction(const std::vector<std::vector<ObservationGraph>> &graphs_by_step) {
    if (graphs_by_step.empty()) return {};
    const std::size_t n = graphs_by_step.front().size();
    std::vector<double> connected(n, 0.0);
    for (const auto &step : graphs_by_step) {
        if (step.size() != n) throw std::invalid_argument("connectivity_fraction: ragged graph log");
        for (std::size_t i = 0; i < n; ++i)
            if (step[i].has_incident_edge(step[i].center)) connected[i] += 1.0;
    }
    for (double &c : connected) c /= static_cast<double>(graphs_by_step.size());
    return connected;
}

SerializedGraph serialize(const ObservationGraph &graph) {
    SerializedGraph out;
    out.center = graph.center;
    out.goal_sharing = graph.goal_sharing;
    out.feature_dim = graph.goal_sharing ? kFeatureDimSharing : kFeatureDimHiding;
    out.node_ids.reserve(graph.nodes.size());
    out.features.reserve(graph.nodes.size() * static_cast<std::size_t>(out.feature_dim));
    for (const GraphNode &n : graph.nodes) {
        const NodeFeature &f = n.feature;
        out.node_ids.push_back(n.id);
        out.features.insert(out.features.end(),
                            {f.rel_position.x, f.rel_position.y, f.rel_velocity.x, f.rel_velocity.y});
        if (graph.goal_sharing) {
            const Vec2 g = f.rel_goal.value_or(f.rel_position);
            out.features.insert(out.features.end(), {g.x, g.y});
        }
        out.features.insert(out.features.end(), {f.kind == EntityKind::agent ? 1.0 : 0.0,
                                                 f.kind == EntityKind::obstacle ? 1.0 : 0.0,
                                                 f.kind == EntityKind::goal ? 1.0 : 0.0});
    }
    const auto row_of = [&](EntityId id) {
        const auto it = std::lower_bound(out.node_ids.begin(), out.node_ids.end(), id);
        return static_cast<std::int64_t>(it - out.node_ids.begin());
    };
    out.edge_index.resize(2 * graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        out.edge_index[e] = row_of(graph.edges[e].src);
        out.edge_index[graph.edges.size() + e] = row_of(graph.edges[e].dst);
    }
    return out;
}

ObservationGraph deserialize(const SerializedGraph &flat) {
    const int dim = flat.goal_sharing ? kFeatureDimSharing : kFeatureDimHiding;
    const std::size_t n = flat.node_ids.size();
    if (flat.feature_dim != dim || flat.features.size() != n * static_cast<std::size_t>(dim))
        throw std::invalid_argument("deserialize: feature buffer does not match layout");
    if (flat.edge_index.size() % 2 != 0) throw std::invalid_argument("deserialize: edge_index must be 2 x E");

    ObservationGraph g;
    g.center = flat.center;
    g.goal_sharing = flat.goal_sharing;
    for (std::size_t r = 0; r < n; ++r) {
        const double *row = flat.features.data() + r * static_cast<std::size_t>(dim);
        NodeFeature f;
        f.rel_position = {row[0], row[1]};
        f.rel_velocity = {row[2], row[3]};
        const double *kind = row + (flat.goal_sharing ? 6 : 4);
        if (kind[0] == 1.0) f.kind = EntityKind::agent;
        else if (kind[1] == 1.0) f.kind = EntityKind::obstacle;
        else if (kind[2] == 1.0) f.kind = EntityKind::goal;
        else throw std::invalid_argument("deserialize: entity type is not one-hot");
        if (flat.goal_sharing) f.rel_goal = Vec2{row[4], row[5]};
        else if (f.kind != EntityKind::agent) f.rel_goal = f.rel_position;
        g.nodes.push_back({flat.node_ids[r], f});
    }
    const std::size_t m = flat.num_edges();
    for (std::size_t e = 0; e < m; ++e) {
        const auto s = flat.edge_index[e];
        const auto t = flat.edge_index[m + e];
        if (s < 0 || t < 0 || static_cast<std::size_t>(s) >= n || static_cast<std::size_t>(t) >= n)
            throw std::invalid_argument("deserialize: edge index out of range");
        g.edges.push_back({flat.node_ids[static_cast<std::size_t>(s)], flat.node_ids[static_cast<std::size_t>(t)]});
    }
    return g;
}

} // namespace orbitsim::obsgraph
