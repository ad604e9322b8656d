#include "cascadia/generate.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cascadia/errors.hpp"

namespace cascadia {

namespace {

// Undirected adjacency bitmask over node pairs (i < j), n <= 8.
std::uint64_t pair_bit(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  return std::uint64_t{1} << ((i - 1) * n + (j - 1));
}

std::uint64_t adjacency_mask(const Graph& g) {
  std::uint64_t mask = 0;
  for (const auto& [tail, head] : g.edges) mask |= pair_bit(tail, head, g.node_count);
  return mask;
}

std::uint64_t permuted_mask(std::uint64_t mask, const std::vector<int>& perm, int n) {
  std::uint64_t out = 0;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (mask & pair_bit(i, j, n)) out |= pair_bit(perm[i - 1], perm[j - 1], n);
    }
  }
  return out;
}

bool mask_connected(std::uint64_t mask, int n) {
  std::vector<int> stack{1};
  std::uint64_t visited = 1;
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    for (int other = 1; other <= n; ++other) {
      if (other == node || (visited & (std::uint64_t{1} << (other - 1)))) continue;
      if (mask & pair_bit(node, other, n)) {
        visited |= std::uint64_t{1} << (other - 1);
        stack.push_back(other);
      }
    }
  }
  return visited == (std::uint64_t{1} << n) - 1;
}

Graph graph_from_mask(std::uint64_t mask, int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (mask & pair_bit(i, j, n)) edges.emplace_back(i, j);
    }
  }
  return build_graph(n, edges);
}

}  // namespace

Graph random_connected_graph(int node_count, Rng& rng, double extra_edge_prob) {
  if (node_count < 2) throw PreconditionViolated("need at least two nodes");

  std::vector<std::pair<int, int>> edges;
  // Random attachment tree keeps connectivity; extra edges fill it out.
  for (int node = 2; node <= node_count; ++node) {
    const int anchor = rng.uniform_int(1, node - 1);
    edges.emplace_back(node, anchor);
  }
  std::uint64_t present = 0;
  for (const auto& [tail, head] : edges) present |= pair_bit(tail, head, node_count);
  for (int i = 1; i <= node_count; ++i) {
    for (int j = i + 1; j <= node_count; ++j) {
      if (present & pair_bit(i, j, node_count)) continue;
      if (rng.uniform01() <= extra_edge_prob) {
        edges.emplace_back(i, j);
        present |= pair_bit(i, j, node_count);
      }
    }
  }
  return build_graph(node_count, edges);
}

std::vector<Graph> all_connected_graphs(int max_nodes) {
  if (max_nodes > 8) throw BudgetExceeded("enumeration supports up to 8 nodes");
  std::vector<Graph> out;
  for (int n = 2; n <= max_nodes; ++n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 1);
    std::vector<std::vector<int>> perms;
    do {
      perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const int pairs = n * (n - 1) / 2;
    std::vector<std::uint64_t> canonical_seen;
    for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << pairs); ++bits) {
      // Expand the compact pair index into the (i,j) mask.
      std::uint64_t mask = 0;
      int at = 0;
      for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j, ++at) {
          if (bits & (std::uint64_t{1} << at)) mask |= pair_bit(i, j, n);
        }
      }
      if (!mask_connected(mask, n)) continue;
      std::uint64_t canon = mask;
      for (const auto& p : perms) canon = std::min(canon, permuted_mask(mask, p, n));
      if (canon != mask) continue;  // only the canonical representative survives
      out.push_back(graph_from_mask(mask, n));
    }
  }
  return out;
}

std::vector<std::vector<int>> graph_automorphisms(const Graph& g) {
  const int n = g.node_count;
  const std::uint64_t mask = adjacency_mask(g);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<std::vector<int>> out;
  do {
    if (permuted_mask(mask, perm, n) == mask) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<int> edge_permutation(const Graph& g, const std::vector<int>& node_perm) {
  std::map<std::pair<int, int>, int> ids;
  for (int e = 1; e <= g.edge_count(); ++e) {
    const auto [tail, head] = g.edges[e - 1];
    ids[std::minmax(tail, head)] = e;
  }
  std::vector<int> out(g.edge_count());
  for (int e = 1; e <= g.edge_count(); ++e) {
    const auto [tail, head] = g.edges[e - 1];
    const auto image = std::minmax(node_perm[tail - 1], node_perm[head - 1]);
    const auto it = ids.find(image);
    if (it == ids.end()) throw PreconditionViolated("permutation is not an automorphism");
    out[e - 1] = it->second;
  }
  return out;
}

Eigen::VectorXd random_gamma(int n, double alpha, Rng& rng) {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(n);
  double sum = 0;
  for (int i = 1; i < n; ++i) {
    gamma(i) = rng.pareto(alpha);
    sum += gamma(i);
  }
  gamma.tail(n - 1) /= sum;
  return gamma;
}

}  // namespace cascadia
