#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cascadia/graph.hpp"

namespace cascadia {

// Bundled six-node reference network with exact rational PTDF matrices and a
// fully worked cascade, used by `repro-example` and the test suites.

const Graph& reference_graph();

// Demand ratios (0, .10, .30, .28, .27, .05); interior point of the region
// where the reference cascade order holds.
Eigen::VectorXd reference_gamma();

Eigen::MatrixXd reference_v();          // V, entries in thirtieths
Eigen::MatrixXd reference_v_reduced();  // V after removing edges 7, 10, 11; twenty-fourths

// Cascade under lambda* in [lambda, 5 lambda / 4): 7, then 11, then 10, then
// the tie {5, 6, 9}.
const std::vector<int>& reference_failure_prefix();      // {7, 11, 10}
const std::vector<int>& reference_tied_edges();          // {5, 6, 9}

// Exceedance ratios right after edge 7 fails, as multiples of
// lambda / lambda*: psi_1 ~ 22/21, psi_4 ~ 17/18, psi_5 = psi_6 ~ 4/3.
// The step-4 tie value 5 lambda / (4 lambda*) is exact for every epsilon.
double reference_psi1_factor();
double reference_psi4_factor();
double reference_psi5_factor();
double reference_tie_factor();

struct ReproOptions {
  double lambda = 0.5;
  double lambda_star = 0.55;
  double epsilon = 1e-4;
  bool high_emergency = false;  // lambda* >= 5 lambda / 4: cascade ends after edge 10
  bool corrupt_fixture = false; // self-test: perturb one golden entry
};

struct ReproReport {
  bool ok = true;
  std::vector<std::string> checks;    // one line per comparison
  std::vector<std::string> failures;
};

ReproReport run_reference_checks(const ReproOptions& options);

}  // namespace cascadia
