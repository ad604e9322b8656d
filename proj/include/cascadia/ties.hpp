#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cascadia/cascade.hpp"
#include "cascadia/graph.hpp"

namespace cascadia {

// Inputs for the exact equal-exceedance test of two edges j, k after some
// failures: rows of the initial and current PTDF, the flow-sign case, the
// generation map A in force and the demand ratios gamma.
struct TieQuery {
  int edge_j = 0;
  int edge_k = 0;
  Eigen::RowVectorXd v_j, v_k;      // rows of the initial V
  Eigen::RowVectorXd v_j_r, v_k_r;  // rows of the current V
  bool same_sign = true;            // f_j * f_k >= 0 at the working demand
  Eigen::MatrixXd a_matrix;
  Eigen::VectorXd gamma;
};

// Q = v_j^T v_k_r - v_k^T v_j_r for same-sign flows, + otherwise.
Eigen::MatrixXd q_matrix(const TieQuery& q);

struct TieConditions {
  bool constant_term = false;  // e1^T Q (A - I) e1 = 0
  bool linear_term = false;    // e1^T [Q(A-I) + (A-I)^T Q^T] gamma = 0
  bool quadratic_term = false; // gamma^T Q (A - I) gamma = 0
  double residual_constant = 0;
  double residual_linear = 0;
  double residual_quadratic = 0;
  double scale = 1;            // residuals are compared against tol * scale

  bool all() const { return constant_term && linear_term && quadratic_term; }
};

// All three hold iff edges j and k have equal exceedance for every
// sufficiently small epsilon. Tolerance is relative to the entries of
// Q (A - I).
TieConditions tie_conditions(const Eigen::MatrixXd& q, const Eigen::MatrixXd& a,
                             const Eigen::VectorXd& gamma, double tol = 1e-8);

// Sufficient condition: Q (A - I) skew-symmetric implies equal exceedance
// for every admissible gamma.
bool skew_symmetry_check(const Eigen::MatrixXd& q, const Eigen::MatrixXd& a,
                         double tol = 1e-9);

// Full pipeline driver: orient for (e1, gamma), plan, solve, remove the
// failure prefix, and evaluate the tie machinery for the pair (j, k).
// Applicable only while the surviving graph stays connected (no balance
// rescaling has occurred); otherwise `applicable` is false.
struct TieAnalysis {
  bool applicable = false;
  std::string reason;
  Eigen::MatrixXd q;
  TieConditions conditions;
  bool skew_symmetric = false;
  double psi_j = 0;
  double psi_k = 0;
  bool same_sign = true;
};

TieAnalysis analyze_tie(const Graph& g, const Eigen::VectorXd& gamma, double lambda,
                        double lambda_star, double epsilon,
                        const std::vector<int>& failed_prefix, int edge_j, int edge_k);

}  // namespace cascadia
