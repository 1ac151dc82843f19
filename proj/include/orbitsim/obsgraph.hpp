#pragma once

/**
 * @file obsgraph.hpp
 * @brief Per-agent agent-entity observation graphs.
 *
 * Nodes are the entities within the sensing radius of at least one agent
 * (every agent is always a node). An edge joins two nodes within the sensing
 * radius of each other (center-to-center, inclusive):
 *  - agent <-> agent: both directions,
 *  - non-agent -> agent: one direction,
 *  - non-agent pairs: none.
 * Node features are relative to the center agent.
 *
 * Flat layout (SerializedGraph):
 *   goal sharing  (9 columns): px py vx vy gx gy is_agent is_obstacle is_goal
 *   goal hiding   (7 columns): px py vx vy is_agent is_obstacle is_goal
 *   edge_index: 2 x E row-major, row 0 = source node row, row 1 = target node row.
 * Nodes are ordered by entity id, edges by (source id, target id).
 */

#include <cstdint>
#include <optional>
#include <vector>

#include "orbitsim/world.hpp"

namespace orbitsim::obsgraph {

struct NodeFeature {
    Vec2 rel_position;
    Vec2 rel_velocity;
    /// Absent on agent nodes when goals are hidden. Equals rel_position for
    /// obstacle and goal nodes.
    std::optional<Vec2> rel_goal;
    EntityKind kind = EntityKind::agent;
    friend bool operator==(const NodeFeature &, const NodeFeature &) = default;
};

struct GraphNode {
    EntityId id = 0;
    NodeFeature feature;
    friend bool operator==(const GraphNode &, const GraphNode &) = default;
};

struct Edge {
    EntityId src = 0;
    EntityId dst = 0;
    friend auto operator<=>(const Edge &, const Edge &) = default;
};

struct ObservationGraph {
    EntityId center = 0;
    bool goal_sharing = true;
    std::vector<GraphNode> nodes;
    std::vector<Edge> edges;

    const GraphNode *find(EntityId id) const;
    bool has_incident_edge(EntityId id) const;
    /// Ids with an edge into `center`, i.e. what the center agent senses.
    std::vector<EntityId> in_neighbors() const;

    friend bool operator==(const ObservationGraph &, const ObservationGraph &) = default;
};

struct LocalObservation {
    Vec2 position;
    Vec2 velocity;
    Vec2 rel_goal;
};

ObservationGraph build_graph(const World &world, EntityId agent, bool goal_sharing);

LocalObservation local_observation(const World &world, EntityId agent);

/// graphs_by_step[k][i] is agent i's graph at step k. Returns, per agent, the
/// fraction of steps whose graph has an edge incident to that agent.
std::vector<double> connectivity_fraction(const std::vector<std::vector<ObservationGraph>> &graphs_by_step);

inline constexpr int kFeatureDimSharing = 9;
inline constexpr int kFeatureDimHiding = 7;

struct SerializedGraph {
    std::int64_t center = 0;
    bool goal_sharing = true;
    int feature_dim = kFeatureDimSharing;
    std::vector<std::int64_t> node_ids;
    std::vector<double> features;         // node_ids.size() x feature_dim
    std::vector<std::int64_t> edge_index; // 2 x E

    std::size_t num_nodes() const { return node_ids.size(); }
    std::size_t num_edges() const { return edge_index.size() / 2; }
};

SerializedGraph serialize(const ObservationGraph &graph);
/// Inverse of serialize. Throws std::invalid_argument on malformed buffers.
ObservationGraph deserialize(const SerializedGraph &flat);

} // namespace orbitsim::obsgraph
