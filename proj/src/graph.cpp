#include "cascadia/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cascadia/errors.hpp"
#include "json.hpp"

namespace cascadia {

namespace {

std::string edge_text(int tail, int head) {
  std::ostringstream os;
  os << "(" << tail << "," << head << ")";
  return os.str();
}

}  // namespace

Graph build_graph(int node_count, const std::vector<std::pair<int, int>>& edge_list) {
  if (node_count < 1) throw MalformedGraph("node_count must be positive");
  if (edge_list.empty()) throw MalformedGraph("edge list must be nonempty");
  if (static_cast<int>(edge_list.size()) > kMaxEdges)
    throw MalformedGraph("at most 64 edges are supported");

  std::set<std::pair<int, int>> seen;
  for (const auto& [tail, head] : edge_list) {
    if (tail < 1 || tail > node_count || head < 1 || head > node_count)
      throw MalformedGraph("edge " + edge_text(tail, head) + " has an out-of-range node");
    if (tail == head) throw MalformedGraph("edge " + edge_text(tail, head) + " is a self-loop");
    const auto key = std::minmax(tail, head);
    if (!seen.insert(key).second)
      throw MalformedGraph("edge " + edge_text(tail, head) + " duplicates an undirected edge");
  }
  return Graph{node_count, edge_list};
}

EdgeMask full_mask(const Graph& g) {
  const int m = g.edge_count();
  return m == kMaxEdges ? ~EdgeMask{0} : (EdgeMask{1} << m) - 1;
}

Eigen::MatrixXd incidence_matrix(const Graph& g) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(g.edge_count(), g.node_count);
  for (int e = 0; e < g.edge_count(); ++e) {
    c(e, g.edges[e].second - 1) = 1.0;
    c(e, g.edges[e].first - 1) = -1.0;
  }
  return c;
}

ComponentPartition connected_components(const Graph& g, EdgeMask surviving_edges) {
  const int n = g.node_count;
  std::vector<std::vector<int>> adjacency(n + 1);
  for (int e = 1; e <= g.edge_count(); ++e) {
    if (!(surviving_edges & edge_bit(e))) continue;
    const auto& [tail, head] = g.edges[e - 1];
    adjacency[tail].push_back(head);
    adjacency[head].push_back(tail);
  }

  ComponentPartition parts;
  parts.assignment.assign(n, 0);
  std::vector<int> stack;
  for (int start = 1; start <= n; ++start) {
    if (parts.assignment[start - 1] != 0) continue;
    const int id = ++parts.component_count;
    stack.push_back(start);
    parts.assignment[start - 1] = id;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int next : adjacency[node]) {
        if (parts.assignment[next - 1] == 0) {
          parts.assignment[next - 1] = id;
          stack.push_back(next);
        }
      }
    }
  }
  return parts;
}

Graph flip_edges(const Graph& g, EdgeMask flips) {
  Graph out = g;
  for (int e = 1; e <= g.edge_count(); ++e) {
    if (flips & edge_bit(e)) std::swap(out.edges[e - 1].first, out.edges[e - 1].second);
  }
  return out;
}

Graph orient_for_demand(const Graph& g, const OrientationSigns& signs) {
  const int m = g.edge_count();
  if (signs.primary.size() != m || signs.secondary.size() != m)
    throw DimensionMismatch("orientation signs must have one entry per edge");
  const double tol = 1e-12 * std::max(1.0, signs.primary.cwiseAbs().maxCoeff());

  EdgeMask flips = 0;
  for (int e = 1; e <= m; ++e) {
    const double primary = signs.primary(e - 1);
    if (primary < -tol) {
      flips |= edge_bit(e);
    } else if (primary <= tol && signs.secondary(e - 1) < -tol) {
      flips |= edge_bit(e);
    }
  }
  return flip_edges(g, flips);
}

Graph graph_from_json(const std::string& text) {
  try {
    const nlohmann::json parsed = nlohmann::json::parse(text);
    if (!parsed.is_object() || !parsed.contains("nodes") || !parsed.contains("edges"))
      throw MalformedGraph("graph JSON must carry \"nodes\" and \"edges\"");

    std::vector<std::pair<int, int>> edges;
    for (const auto& entry : parsed["edges"]) {
      if (!entry.is_array() || entry.size() != 2)
        throw MalformedGraph("each edge must be a [tail, head] pair");
      edges.emplace_back(entry[0].get<int>(), entry[1].get<int>());
    }
    return build_graph(parsed["nodes"].get<int>(), edges);
  } catch (const nlohmann::json::exception& ex) {
    throw MalformedGraph(std::string("invalid graph JSON: ") + ex.what());
  }
}

std::string graph_to_json(const Graph& g) {
  nlohmann::json out;
  out["nodes"] = g.node_count;
  auto edges = nlohmann::json::array();
  for (const auto& [tail, head] : g.edges) edges.push_back({tail, head});
  out["edges"] = edges;
  return out.dump();
}

}  // namespace cascadia
