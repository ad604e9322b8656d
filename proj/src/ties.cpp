#include "cascadia/ties.hpp"

#include <cmath>

#include "cascadia/dcopf.hpp"
#include "cascadia/errors.hpp"
#include "cascadia/scenarios.hpp"

namespace cascadia {

Eigen::MatrixXd q_matrix(const TieQuery& q) {
  const Eigen::MatrixXd first = q.v_j.transpose() * q.v_k_r;
  const Eigen::MatrixXd second = q.v_k.transpose() * q.v_j_r;
  return q.same_sign ? Eigen::MatrixXd(first - second) : Eigen::MatrixXd(first + second);
}

TieConditions tie_conditions(const Eigen::MatrixXd& q, const Eigen::MatrixXd& a,
                             const Eigen::VectorXd& gamma, double tol) {
  const int n = static_cast<int>(a.rows());
  const Eigen::MatrixXd core = q * (a - Eigen::MatrixXd::Identity(n, n));
  const double scale = std::max(1.0, core.cwiseAbs().maxCoeff());

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
  e1(0) = 1.0;

  TieConditions out;
  out.scale = scale;
  out.residual_constant = std::abs(e1.dot(core * e1));
  out.residual_linear = std::abs((e1.transpose() * (core + core.transpose())).dot(gamma));
  out.residual_quadratic = std::abs(gamma.dot(core * gamma));
  out.constant_term = out.residual_constant <= tol * scale;
  out.linear_term = out.residual_linear <= tol * scale;
  out.quadratic_term = out.residual_quadratic <= tol * scale;
  return out;
}

bool skew_symmetry_check(const Eigen::MatrixXd& q, const Eigen::MatrixXd& a, double tol) {
  const int n = static_cast<int>(a.rows());
  const Eigen::MatrixXd core = q * (a - Eigen::MatrixXd::Identity(n, n));
  const double magnitude = core.cwiseAbs().maxCoeff();
  const double defect = (core + core.transpose()).cwiseAbs().maxCoeff();
  return defect <= tol * std::max(magnitude, 1e-300);
}

TieAnalysis analyze_tie(const Graph& g, const Eigen::VectorXd& gamma, double lambda,
                        double lambda_star, double epsilon,
                        const std::vector<int>& failed_prefix, int edge_j, int edge_k) {
  TieAnalysis out;
  const int m = g.edge_count();
  if (edge_j < 1 || edge_j > m || edge_k < 1 || edge_k > m)
    throw PreconditionViolated("pair edges out of range");

  // Fix the orientation from the (e1, gamma) signs, then plan and solve.
  const Eigen::VectorXd d = big_jump_profile(gamma, epsilon);
  PtdfSystem base = compute_ptdf(g);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(g.node_count);
  e1(0) = 1.0;
  const Graph oriented = orient_for_demand(g, {base.v * e1, base.v * gamma});
  const PtdfSystem ptdf = compute_ptdf(oriented);
  const LimitSet limits = planning_stage(ptdf, d, lambda, lambda_star);
  const OpfSolution sol = solve(make_opf_problem(ptdf, d, lambda));
  const Eigen::MatrixXd a = projection_matrix(ptdf, sol.active_set, lambda);

  EdgeMask surviving = full_mask(oriented);
  for (int e : failed_prefix) {
    if (e < 1 || e > m) throw PreconditionViolated("failure prefix edge out of range");
    surviving &= ~edge_bit(e);
  }
  if (!(surviving & edge_bit(edge_j)) || !(surviving & edge_bit(edge_k)))
    throw PreconditionViolated("pair edges must survive the failure prefix");

  // The exact conditions assume no balance rescaling has happened, which is
  // the same as the surviving graph staying connected.
  if (!is_connected(oriented, surviving)) {
    out.applicable = false;
    out.reason = "surviving graph is disconnected; demand or generation was rescaled";
    return out;
  }
  out.applicable = true;

  const PtdfSystem current = compute_ptdf(oriented, surviving);
  const Eigen::VectorXd f = flow(current, d, sol.generation);

  auto dead_zone_sign = [](double x) { return std::abs(x) <= 1e-12 ? 0.0 : (x > 0 ? 1.0 : -1.0); };
  out.same_sign = dead_zone_sign(f(edge_j - 1)) * dead_zone_sign(f(edge_k - 1)) >= 0.0;

  TieQuery query;
  query.edge_j = edge_j;
  query.edge_k = edge_k;
  query.v_j = ptdf.v.row(edge_j - 1);
  query.v_k = ptdf.v.row(edge_k - 1);
  query.v_j_r = current.v.row(edge_j - 1);
  query.v_k_r = current.v.row(edge_k - 1);
  query.same_sign = out.same_sign;
  query.a_matrix = a;
  query.gamma = gamma;

  out.q = q_matrix(query);
  out.conditions = tie_conditions(out.q, a, gamma);
  out.skew_symmetric = skew_symmetry_check(out.q, a);

  NetworkState state{d, sol.generation, surviving, f};
  const Eigen::VectorXd psi = exceedances(state, limits);
  out.psi_j = psi(edge_j - 1);
  out.psi_k = psi(edge_k - 1);
  return out;
}

}  // namespace cascadia
