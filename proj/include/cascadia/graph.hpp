#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cascadia {

// Edge subsets are bitmasks over 1-based edge ids (bit e-1 <-> edge e).
using EdgeMask = std::uint64_t;
inline constexpr int kMaxEdges = 64;

inline EdgeMask edge_bit(int edge) { return EdgeMask{1} << (edge - 1); }

// Directed simple graph. Nodes and edges are 1-based; the edge id is the
// position in the input edge list and doubles as the tie-break label.
// Orientation is a modeling artifact, not a property of the network.
struct Graph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // (tail, head)

  int edge_count() const { return static_cast<int>(edges.size()); }
  bool operator==(const Graph&) const = default;
};

// Validates node range, self-loops and duplicate undirected edges.
// Throws MalformedGraph naming the offending edge.
Graph build_graph(int node_count, const std::vector<std::pair<int, int>>& edge_list);

EdgeMask full_mask(const Graph& g);

// Row e: +1 at the head of edge e, -1 at its tail.
Eigen::MatrixXd incidence_matrix(const Graph& g);

struct ComponentPartition {
  std::vector<int> assignment;  // node -> component id, ids contiguous from 1
  int component_count = 0;

  bool operator==(const ComponentPartition&) const = default;
};

// Undirected connectivity over the surviving edges; isolated nodes become
// singleton components. Ids are assigned in order of first appearance.
ComponentPartition connected_components(const Graph& g, EdgeMask surviving_edges);

inline bool is_connected(const Graph& g, EdgeMask surviving) {
  return connected_components(g, surviving).component_count == 1;
}

// Per-edge signs steering the orientation normalization: `primary` is the
// flow component of the dominant demand (V e1, or V d for a realized demand),
// `secondary` breaks the tie when the primary entry vanishes (V gamma).
struct OrientationSigns {
  Eigen::VectorXd primary;
  Eigen::VectorXd secondary;
};

// Flips every edge whose flow component is negative so that V d >= 0 holds
// for the demand the signs were computed from. Idempotent.
Graph orient_for_demand(const Graph& g, const OrientationSigns& signs);

Graph flip_edges(const Graph& g, EdgeMask flips);

// {"nodes": n, "edges": [[tail, head], ...]}, 1-indexed.
Graph graph_from_json(const std::string& text);
std::string graph_to_json(const Graph& g);

}  // namespace cascadia
