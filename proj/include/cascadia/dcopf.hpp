#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cascadia/ptdf.hpp"

namespace cascadia {

// Quadratic dispatch problem: minimize 1/2 sum g_i^2 subject to
// e^T g = e^T d and lower <= V g <= upper, where lower = (1-lambda) V d and
// upper = (1+lambda) V d. Requires the orientation that makes V d >= 0.
//
// Hyperplane indexing: 0 is the balance constraint, e in 1..m the lower flow
// bound of edge e, m+e its upper bound.
struct OpfProblem {
  PtdfSystem ptdf;
  Eigen::VectorXd demand;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double total = 0;
  double lambda = 0;
};

OpfProblem make_opf_problem(const PtdfSystem& p, const Eigen::VectorXd& demand, double lambda);

struct OpfSolution {
  Eigen::VectorXd generation;
  std::vector<int> active_set;  // sorted; 0 always present; zero-capacity
                                // edges collapsed to their lower index
  Eigen::VectorXd mu;           // lower-bound multipliers, >= 0
  Eigen::VectorXd nu;           // upper-bound multipliers, >= 0
  double delta = 0;             // balance multiplier
  double kkt_residual = 0;
};

// Primal active-set solve of the projection formulation: starting from the
// feasible point g = d, repeatedly project the unconstrained optimum
// (mean demand on every node) onto the current face, add the blocking
// constraint on a partial step, drop constraints with negative multipliers.
// Throws NumericalFailure if the pivot budget 10(2m+1) is exhausted or the
// minimizer dips below g >= -1e-9.
OpfSolution solve(const OpfProblem& p);

// A_I = (1/n) J + [V_I1^T V_I2^T] ([V_I1; V_I2][V_I1^T V_I2^T])^+
//       [(1-lambda) V_I1; (1+lambda) V_I2],
// with dependent rows of the stacked block removed before inversion.
// Requires 0 in I.
Eigen::MatrixXd projection_matrix(const PtdfSystem& p, const std::vector<int>& index_set,
                                  double lambda);

// A_I d without forming the n x n matrix.
Eigen::VectorXd project_onto_face(const PtdfSystem& p, const std::vector<int>& index_set,
                                  double lambda, const Eigen::VectorXd& demand);

// g*(d) = (1-lambda) d + lambda dbar e, valid whenever C d >= 0.
Eigen::VectorXd closed_form_generation(const Eigen::VectorXd& demand, double lambda,
                                       const Eigen::MatrixXd& incidence);

struct KktReport {
  double stationarity = 0;
  double dual_feasibility = 0;
  double complementarity = 0;
  double primal_feasibility = 0;
  double balance = 0;
  double max_violation = 0;
  bool accepted = false;
};

// Residuals of the stationarity / feasibility / complementarity system,
// evaluated on the problem rescaled to unit peak demand so that the 1e-7
// acceptance threshold is meaningful at any demand magnitude.
KktReport verify_kkt(const OpfProblem& p, const OpfSolution& s);

// Geometric active set of a feasible point: index i is included iff the
// hyperplane-i residual is within tol * max(1, |rhs|). Zero-capacity edges
// (both bounds zero) are reported once, as the lower index.
std::vector<int> active_index_set(const OpfProblem& p, const Eigen::VectorXd& g,
                                  double tol = 1e-8);

// Exhaustive face enumeration. Ground truth for small instances; requires
// 2m+1 <= 23 effective hyperplanes, else throws BudgetExceeded.
OpfSolution face_enumeration_oracle(const OpfProblem& p);

}  // namespace cascadia
