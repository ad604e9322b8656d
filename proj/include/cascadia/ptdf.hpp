#pragma once

#include <Eigen/Dense>
#include <unordered_map>

#include "cascadia/graph.hpp"

namespace cascadia {

// Power transfer distribution factors V = C (C^T C)^+ with unit susceptances.
// Rows of removed edges are kept as zeros so callers can keep addressing
// flows by original edge id; `surviving` says which rows are live.
struct PtdfSystem {
  Graph graph;
  Eigen::MatrixXd v;  // m x n
  EdgeMask surviving = 0;

  int node_count() const { return graph.node_count; }
  int edge_count() const { return graph.edge_count(); }
};

PtdfSystem compute_ptdf(const Graph& g, EdgeMask surviving_edges);
PtdfSystem compute_ptdf(const Graph& g);

// f = V (d - g). Entries of removed edges come out as zero; treat them as
// absent, not as flows.
Eigen::VectorXd flow(const PtdfSystem& p, const Eigen::VectorXd& demand,
                     const Eigen::VectorXd& generation);

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via its
// eigendecomposition; eigenvalues below 1e-10 * max eigenvalue are kernel.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& mat);

struct LimitSet {
  Eigen::VectorXd operational;  // f-bar = lambda |V d|
  Eigen::VectorXd emergency;    // F = (lambda*/lambda) f-bar
  double lambda = 0;
  double lambda_star = 0;
};

// Derives per-edge limits from the planning flow V d. Requires
// lambda in (0,1) and lambda_star >= lambda.
LimitSet planning_stage(const PtdfSystem& p, const Eigen::VectorXd& demand, double lambda,
                        double lambda_star);

// Memoizes PTDF systems and component partitions per surviving-edge mask for
// one fixed graph. Not thread safe; give each worker its own instance.
class PtdfCache {
 public:
  explicit PtdfCache(Graph g) : graph_(std::move(g)) {}

  const Graph& graph() const { return graph_; }
  const PtdfSystem& get(EdgeMask surviving);
  const ComponentPartition& components(EdgeMask surviving);

 private:
  Graph graph_;
  std::unordered_map<EdgeMask, PtdfSystem> ptdf_;
  std::unordered_map<EdgeMask, ComponentPartition> parts_;
};

}  // namespace cascadia
