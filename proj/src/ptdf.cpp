#include "cascadia/ptdf.hpp"

#include <Eigen/Eigenvalues>

#include "cascadia/errors.hpp"

namespace cascadia {

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& mat) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mat);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(0.0, values.cwiseAbs().maxCoeff());
  Eigen::VectorXd inverted = Eigen::VectorXd::Zero(values.size());
  for (int i = 0; i < values.size(); ++i) {
    if (values(i) > cutoff) inverted(i) = 1.0 / values(i);
  }
  return eig.eigenvectors() * inverted.asDiagonal() * eig.eigenvectors().transpose();
}

PtdfSystem compute_ptdf(const Graph& g, EdgeMask surviving_edges) {
  const int n = g.node_count;
  const int m = g.edge_count();
  if (surviving_edges == 0) throw PreconditionViolated("surviving edge set must be nonempty");

  // Laplacian of the surviving subgraph, all n columns kept; the kernel grows
  // with each extra component and the pseudo-inverse absorbs it.
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  for (int e = 1; e <= m; ++e) {
    if (!(surviving_edges & edge_bit(e))) continue;
    const int tail = g.edges[e - 1].first - 1;
    const int head = g.edges[e - 1].second - 1;
    laplacian(tail, tail) += 1.0;
    laplacian(head, head) += 1.0;
    laplacian(tail, head) -= 1.0;
    laplacian(head, tail) -= 1.0;
  }
  const Eigen::MatrixXd lpinv = symmetric_pinv(laplacian);

  PtdfSystem out;
  out.graph = g;
  out.surviving = surviving_edges;
  out.v = Eigen::MatrixXd::Zero(m, n);
  for (int e = 1; e <= m; ++e) {
    if (!(surviving_edges & edge_bit(e))) continue;
    const int tail = g.edges[e - 1].first - 1;
    const int head = g.edges[e - 1].second - 1;
    out.v.row(e - 1) = lpinv.row(head) - lpinv.row(tail);
  }
  return out;
}

PtdfSystem compute_ptdf(const Graph& g) { return compute_ptdf(g, full_mask(g)); }

Eigen::VectorXd flow(const PtdfSystem& p, const Eigen::VectorXd& demand,
                     const Eigen::VectorXd& generation) {
  if (demand.size() != p.node_count() || generation.size() != p.node_count())
    throw DimensionMismatch("demand and generation must have one entry per node");
  return p.v * (demand - generation);
}

LimitSet planning_stage(const PtdfSystem& p, const Eigen::VectorXd& demand, double lambda,
                        double lambda_star) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw InvalidLoadingFactor("lambda must lie in (0, 1)");
  if (!(lambda_star >= lambda))
    throw InvalidLoadingFactor("lambda_star must be at least lambda");
  if (demand.size() != p.node_count())
    throw DimensionMismatch("demand must have one entry per node");
  if (!(demand.minCoeff() >= 0.0) || demand.maxCoeff() <= 0.0)
    throw PreconditionViolated("demand must be nonnegative and nonzero");

  LimitSet limits;
  limits.lambda = lambda;
  limits.lambda_star = lambda_star;
  limits.operational = lambda * (p.v * demand).cwiseAbs();
  limits.emergency = (lambda_star / lambda) * limits.operational;
  return limits;
}

const PtdfSystem& PtdfCache::get(EdgeMask surviving) {
  auto it = ptdf_.find(surviving);
  if (it == ptdf_.end()) it = ptdf_.emplace(surviving, compute_ptdf(graph_, surviving)).first;
  return it->second;
}

const ComponentPartition& PtdfCache::components(EdgeMask surviving) {
  auto it = parts_.find(surviving);
  if (it == parts_.end())
    it = parts_.emplace(surviving, connected_components(graph_, surviving)).first;
  return it->second;
}

}  // namespace cascadia
