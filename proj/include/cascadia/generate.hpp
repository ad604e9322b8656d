#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cascadia/graph.hpp"
#include "cascadia/rng.hpp"

namespace cascadia {

// Random spanning tree plus independent extra edges; always connected.
Graph random_connected_graph(int node_count, Rng& rng, double extra_edge_prob = 0.35);

// One representative per isomorphism class of connected simple graphs with
// 2..max_nodes nodes (canonical form by minimum adjacency bitmask over all
// node permutations). 142 graphs for max_nodes = 6.
std::vector<Graph> all_connected_graphs(int max_nodes);

// Node permutations (1-based, perm[i-1] is the image of node i) preserving
// the undirected edge set. Brute force, intended for small n.
std::vector<std::vector<int>> graph_automorphisms(const Graph& g);

// Maps edge ids through a node automorphism: result[e-1] is the id of the
// edge whose endpoint set is the image of edge e's endpoints.
std::vector<int> edge_permutation(const Graph& g, const std::vector<int>& node_perm);

// Demand-ratio vector (0, w_2, ..., w_n) / sum(w) with w_j i.i.d. Pareto.
Eigen::VectorXd random_gamma(int n, double alpha, Rng& rng);

}  // namespace cascadia
