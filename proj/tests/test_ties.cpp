#include "doctest.h"

#include <cmath>

#include "cascadia/dcopf.hpp"
#include "cascadia/generate.hpp"
#include "cascadia/reference_instance.hpp"
#include "cascadia/rng.hpp"
#include "cascadia/scenarios.hpp"
#include "cascadia/ties.hpp"

#include "tie_check_common.hpp"

using namespace cascadia;

namespace {

Eigen::MatrixXd closed_form_map(int n, double lambda) {
  return (1.0 - lambda) * Eigen::MatrixXd::Identity(n, n) +
         (lambda / n) * Eigen::MatrixXd::Constant(n, n, 1.0);
}

// Q for a tied pair of the reference instance after edges 7, 10, 11 fail.
Eigen::MatrixXd reference_q(int edge_j, int edge_k) {
  const Eigen::MatrixXd v = reference_v();
  const Eigen::MatrixXd v4 = reference_v_reduced();
  TieQuery query;
  query.edge_j = edge_j;
  query.edge_k = edge_k;
  query.v_j = v.row(edge_j - 1);
  query.v_k = v.row(edge_k - 1);
  query.v_j_r = v4.row(edge_j - 1);
  query.v_k_r = v4.row(edge_k - 1);
  query.same_sign = true;  // flows on 5, 6, 9 are positive near epsilon = 0
  return q_matrix(query);
}

}  // namespace

TEST_CASE("q_matrix vanishes for a self pair") {
  CHECK(reference_q(5, 5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reference Q is skew with e in its kernel") {
  const Eigen::MatrixXd q = reference_q(5, 6);
  CHECK((q + q.transpose()).cwiseAbs().maxCoeff() <= 1e-12);  // rows scale by 5/4
  CHECK((q * Eigen::VectorXd::Ones(6)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("tie conditions hold for the reference pairs under the closed-form map") {
  const double lambda = 0.5;
  const Eigen::MatrixXd a = closed_form_map(6, lambda);
  Rng rng(17);
  const auto& tied = reference_tied_edges();
  for (std::size_t x = 0; x < tied.size(); ++x) {
    for (std::size_t y = x + 1; y < tied.size(); ++y) {
      const Eigen::MatrixXd q = reference_q(tied[x], tied[y]);
      CHECK(skew_symmetry_check(q, a));
      // Q (A - I) = -lambda Q because e lies in Ker(Q).
      const Eigen::MatrixXd core = q * (a - Eigen::MatrixXd::Identity(6, 6));
      CHECK((core + lambda * q).cwiseAbs().maxCoeff() <= 1e-12);
      for (int trial = 0; trial < 50; ++trial) {
        CHECK(tie_conditions(q, a, random_gamma(6, 1.5, rng)).all());
      }
    }
  }
}

TEST_CASE("zero Q satisfies everything") {
  const Eigen::MatrixXd q = Eigen::MatrixXd::Zero(6, 6);
  CHECK(tie_conditions(q, closed_form_map(6, 0.5), reference_gamma()).all());
  CHECK(skew_symmetry_check(q, closed_form_map(6, 0.5)));
}

TEST_CASE("symmetric Q against a zero map is not skew") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 4);
  CHECK_FALSE(skew_symmetry_check(q, Eigen::MatrixXd::Zero(4, 4)));
}

TEST_CASE("random skew Q with e in the kernel passes the skew-symmetry sufficient condition") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.uniform_int(3, 7);
    // Build skew Q whose rows are orthogonal to e: S (I - J/n) applied on
    // both sides of a random skew seed.
    Eigen::MatrixXd seed(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) seed(i, j) = rng.uniform01() - 0.5;
    Eigen::MatrixXd skew = seed - seed.transpose();
    const Eigen::MatrixXd center =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const Eigen::MatrixXd q = center * skew * center;
    CHECK(skew_symmetry_check(q, closed_form_map(n, 0.35)));
  }
}

TEST_CASE("non-tied pair violates at least one condition") {
  // Edges 1 and 4 after the first failure: 22/21 vs 17/18 exceedance units.
  const TieAnalysis analysis =
      analyze_tie(reference_graph(), reference_gamma(), 0.5, 0.55, 1e-4, {7}, 1, 4);
  REQUIRE(analysis.applicable);
  CHECK_FALSE(analysis.conditions.all());
  CHECK_FALSE(analysis.skew_symmetric);
  CHECK(analysis.psi_j != doctest::Approx(analysis.psi_k).epsilon(1e-3));
}

TEST_CASE("analyze_tie confirms the reference tie end to end") {
  const auto& tied = reference_tied_edges();
  for (std::size_t x = 0; x < tied.size(); ++x) {
    for (std::size_t y = x + 1; y < tied.size(); ++y) {
      const TieAnalysis analysis =
          analyze_tie(reference_graph(), reference_gamma(), 0.5, 0.55, 1e-4,
                      reference_failure_prefix(), tied[x], tied[y]);
      REQUIRE(analysis.applicable);
      CHECK(analysis.same_sign);
      CHECK(analysis.conditions.all());
      CHECK(analysis.skew_symmetric);
      CHECK(analysis.psi_j == doctest::Approx(analysis.psi_k).epsilon(1e-10));
      CHECK(analysis.psi_j == doctest::Approx(5 * 0.5 / (4 * 0.55)).epsilon(1e-9));
    }
  }
}

TEST_CASE("analyze_tie refuses disconnected prefixes") {
  // Removing edges 1..4 cuts node 1 loose.
  const TieAnalysis analysis = analyze_tie(reference_graph(), reference_gamma(), 0.5, 0.55,
                                           1e-4, {1, 2, 3, 4}, 5, 6);
  CHECK_FALSE(analysis.applicable);
}

TEST_CASE("tie conditions match simulated equality on random graphs") {
  // Both directions of the exact characterization, on a smaller sample than
  // the acceptance sweep.
  Rng rng(29);
  tie_check::SweepStats stats;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.uniform_int(3, 6);
    const Graph g = random_connected_graph(n, rng, 0.5);
    const Eigen::VectorXd gamma = random_gamma(n, 1.5, rng);
    const int first_edge = rng.uniform_int(1, g.edge_count());
    stats += tie_check::sweep_instance(g, gamma, first_edge, 0.5, 0.55);
  }
  CHECK(stats.mismatches == 0);
  CHECK(stats.pairs > 100);  // the sweep must actually exercise pairs
}
