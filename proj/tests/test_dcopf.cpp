#include "doctest.h"

#include <algorithm>

#include "cascadia/dcopf.hpp"
#include "cascadia/errors.hpp"
#include "cascadia/generate.hpp"
#include "cascadia/reference_instance.hpp"
#include "cascadia/rng.hpp"
#include "cascadia/scenarios.hpp"

using namespace cascadia;

namespace {

Eigen::VectorXd unit_demand(int n) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  d(0) = 1.0;
  return d;
}

// Orients so that V e1 >= 0 (gamma tie-break optional).
PtdfSystem oriented_for(const Graph& g, const Eigen::VectorXd& demand,
                        const Eigen::VectorXd& secondary) {
  const PtdfSystem base = compute_ptdf(g);
  return compute_ptdf(orient_for_demand(g, {base.v * demand, secondary}));
}

Eigen::VectorXd single_sink_form(int n, double lambda) {
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n, lambda / n);
  g(0) += 1.0 - lambda;
  return g;
}

}  // namespace

TEST_CASE("solve matches the single-sink closed form") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(2, 6);
    const Graph g = random_connected_graph(n, rng);
    const double lambda = 0.1 + 0.8 * rng.uniform01();
    const Eigen::VectorXd d = unit_demand(n);
    const PtdfSystem p = oriented_for(g, d, Eigen::VectorXd::Zero(g.edge_count()));

    const OpfSolution sol = solve(make_opf_problem(p, d, lambda));
    CHECK((sol.generation - single_sink_form(n, lambda)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(sol.kkt_residual <= 1e-7);
  }
}

TEST_CASE("solve matches the nonnegative-incidence closed form") {
  // The closed form certifies optimality through mu = (1-lambda) C d >= 0,
  // which presumes the standing orientation V d >= 0. Sample demands until
  // both sign conditions hold in the same frame.
  Rng rng(102);
  int accepted = 0;
  while (accepted < 20) {
    const int n = rng.uniform_int(2, 6);
    const Graph g = random_connected_graph(n, rng);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.uniform01() + 0.01;

    const PtdfSystem base = compute_ptdf(g);
    const Graph oriented =
        orient_for_demand(g, {base.v * d, Eigen::VectorXd::Zero(g.edge_count())});
    const Eigen::MatrixXd c = incidence_matrix(oriented);
    if ((c * d).minCoeff() < 0) continue;
    ++accepted;

    const double lambda = 0.1 + 0.8 * rng.uniform01();
    const Eigen::VectorXd expected = closed_form_generation(d, lambda, c);
    const PtdfSystem p = compute_ptdf(oriented);
    const OpfSolution sol = solve(make_opf_problem(p, d, lambda));
    CHECK((sol.generation - expected).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("closed_form_generation basics") {
  const Graph& g = reference_graph();
  const Eigen::MatrixXd c = incidence_matrix(g);
  const double lambda = 0.5;

  const Eigen::VectorXd ge1 = closed_form_generation(unit_demand(6), lambda, c);
  CHECK((ge1 - single_sink_form(6, lambda)).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(6, 3.25);
  CHECK((closed_form_generation(uniform, lambda, c) - uniform).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::VectorXd bad = unit_demand(6);
  bad(1) = 2.0;  // edge (2,1) now has negative incidence product
  CHECK_THROWS_AS(closed_form_generation(bad, lambda, c), PreconditionViolated);
}

TEST_CASE("projection_matrix on the balance hyperplane alone averages") {
  const PtdfSystem p = compute_ptdf(reference_graph());
  const Eigen::MatrixXd a = projection_matrix(p, {0}, 0.5);
  CHECK((a - Eigen::MatrixXd::Constant(6, 6, 1.0 / 6)).cwiseAbs().maxCoeff() <= 1e-12);

  Rng rng(5);
  Eigen::VectorXd d(6);
  for (int i = 0; i < 6; ++i) d(i) = rng.uniform01();
  CHECK(((a * d).array() - d.mean()).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("projection with only lower rows is symmetric") {
  const PtdfSystem p = compute_ptdf(reference_graph());
  const Eigen::MatrixXd a = projection_matrix(p, {0, 1, 2, 3, 4}, 0.4);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("first column of realized projection matrices is pinned") {
  Rng rng(103);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.uniform_int(2, 6);
    const Graph g = random_connected_graph(n, rng);
    const Eigen::VectorXd gamma = random_gamma(n, 1.5, rng);
    const double lambda = 0.1 + 0.8 * rng.uniform01();

    const PtdfSystem base = compute_ptdf(g);
    const PtdfSystem p =
        compute_ptdf(orient_for_demand(g, {base.v * unit_demand(n), base.v * gamma}));
    const Eigen::VectorXd d = big_jump_profile(gamma, 1e-5);
    const OpfSolution sol = solve(make_opf_problem(p, d, lambda));
    const Eigen::MatrixXd a = projection_matrix(p, sol.active_set, lambda);

    CHECK((a * d - sol.generation).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a * unit_demand(n) - single_sink_form(n, lambda)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("edges adjacent to the big-demand node sit on the lower bound") {
  Rng rng(104);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(3, 6);
    const Graph g = random_connected_graph(n, rng);
    const Eigen::VectorXd gamma = random_gamma(n, 1.5, rng);
    const PtdfSystem base = compute_ptdf(g);
    const Graph oriented =
        orient_for_demand(g, {base.v * unit_demand(n), base.v * gamma});
    const PtdfSystem p = compute_ptdf(oriented);
    const Eigen::VectorXd d = big_jump_profile(gamma, 1e-5);
    const double lambda = 0.3;
    const OpfProblem problem = make_opf_problem(p, d, lambda);
    const OpfSolution sol = solve(problem);

    const Eigen::VectorXd vg = p.v * sol.generation;
    for (int e = 1; e <= oriented.edge_count(); ++e) {
      const auto& [tail, head] = oriented.edges[e - 1];
      if (tail != 1 && head != 1) continue;
      CHECK(std::abs(vg(e - 1) - problem.lower(e - 1)) <= 1e-8);
    }
  }
}

TEST_CASE("upper bounds of positive-flow edges stay slack at small epsilon") {
  Rng rng(105);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(2, 6);
    const Graph g = random_connected_graph(n, rng);
    const Eigen::VectorXd gamma = random_gamma(n, 1.5, rng);
    const PtdfSystem base = compute_ptdf(g);
    const Eigen::VectorXd ve1 = base.v * unit_demand(n);
    const PtdfSystem p = compute_ptdf(orient_for_demand(g, {ve1, base.v * gamma}));
    const OpfSolution sol = solve(make_opf_problem(p, big_jump_profile(gamma, 1e-5), 0.5));

    for (int idx : sol.active_set) {
      if (idx <= g.edge_count()) continue;
      CHECK(std::abs(ve1(idx - g.edge_count() - 1)) <= 1e-9);
    }
  }
}

TEST_CASE("active set of the single-sink solution holds every lower bound") {
  const Graph& g = reference_graph();
  const PtdfSystem p = compute_ptdf(g);  // reference orientation already has V e1 >= 0
  const OpfProblem problem = make_opf_problem(p, unit_demand(6), 0.5);
  const OpfSolution sol = solve(problem);
  std::vector<int> expected(12);
  for (int i = 0; i < 12; ++i) expected[i] = i;
  CHECK(sol.active_set == expected);
}

TEST_CASE("verify_kkt certifies the closed-form multipliers") {
  const Graph& g = reference_graph();
  const PtdfSystem p = compute_ptdf(g);
  const double lambda = 0.5;
  const Eigen::VectorXd d = big_jump_profile(reference_gamma(), 1e-4);
  const OpfProblem problem = make_opf_problem(p, d, lambda);

  OpfSolution manual;
  manual.generation = closed_form_generation(d, lambda, incidence_matrix(g));
  manual.mu = (1.0 - lambda) * (incidence_matrix(g) * d);
  manual.nu = Eigen::VectorXd::Zero(11);
  manual.delta = -d.mean();
  const KktReport report = verify_kkt(problem, manual);
  CHECK(report.max_violation <= 1e-10);
  CHECK(report.accepted);
}

TEST_CASE("verify_kkt flags a perturbed solution") {
  const Graph& g = reference_graph();
  const PtdfSystem p = compute_ptdf(g);
  const Eigen::VectorXd d = big_jump_profile(reference_gamma(), 1e-4);
  const OpfProblem problem = make_opf_problem(p, d, 0.5);
  OpfSolution sol = solve(problem);
  CHECK(verify_kkt(problem, sol).max_violation <= 1e-7);

  sol.generation(2) += 1e-3;
  CHECK(verify_kkt(problem, sol).max_violation > 1e-4);
}

TEST_CASE("unconstrained optimum needs only the balance multiplier") {
  // Uniform demand: g* = d = dbar e, no flow constraint active.
  const Graph& g = reference_graph();
  const PtdfSystem p = compute_ptdf(g);
  const Eigen::VectorXd d = Eigen::VectorXd::Constant(6, 2.0);
  const OpfProblem problem = make_opf_problem(p, d, 0.5);

  OpfSolution manual;
  manual.generation = d;
  manual.mu = Eigen::VectorXd::Zero(11);
  manual.nu = Eigen::VectorXd::Zero(11);
  manual.delta = -2.0;
  CHECK(verify_kkt(problem, manual).max_violation <= 1e-12);
}

TEST_CASE("oracle solves the 2-node projection by hand") {
  const Graph g = build_graph(2, {{2, 1}});
  const PtdfSystem p = compute_ptdf(g);
  const OpfProblem problem = make_opf_problem(p, unit_demand(2), 0.5);
  const OpfSolution sol = face_enumeration_oracle(problem);
  CHECK(sol.generation(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(sol.generation(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("solve equals the face-enumeration oracle on random instances") {
  Rng rng(106);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = rng.uniform_int(2, 4);
    const Graph g = random_connected_graph(n, rng, 0.5);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.uniform01() + 1e-3;
    const double lambda = 0.05 + 0.9 * rng.uniform01();

    const PtdfSystem base = compute_ptdf(g);
    const PtdfSystem p = compute_ptdf(
        orient_for_demand(g, {base.v * d, Eigen::VectorXd::Zero(g.edge_count())}));
    const OpfProblem problem = make_opf_problem(p, d, lambda);
    const OpfSolution fast = solve(problem);
    const OpfSolution oracle = face_enumeration_oracle(problem);
    CHECK((fast.generation - oracle.generation).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(fast.kkt_residual <= 1e-7);
  }
}

TEST_CASE("solve equals the oracle on big-jump profiles") {
  // Demands with a 1e5 scale separation: the hardest regime for the
  // active-set tolerances.
  Rng rng(109);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniform_int(2, 4);
    const Graph g = random_connected_graph(n, rng, 0.5);
    const Eigen::VectorXd gamma = random_gamma(n, 1.5, rng);
    const double lambda = 0.1 + 0.8 * rng.uniform01();

    const PtdfSystem base = compute_ptdf(g);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
    e1(0) = 1.0;
    const PtdfSystem p = compute_ptdf(orient_for_demand(g, {base.v * e1, base.v * gamma}));
    const OpfProblem problem = make_opf_problem(p, big_jump_profile(gamma, 1e-5), lambda);
    const OpfSolution fast = solve(problem);
    const OpfSolution oracle = face_enumeration_oracle(problem);
    CHECK((fast.generation - oracle.generation).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(fast.kkt_residual <= 1e-7);
  }
}

TEST_CASE("solve is scale invariant") {
  const Graph& g = reference_graph();
  const PtdfSystem p = compute_ptdf(g);
  const Eigen::VectorXd d = big_jump_profile(reference_gamma(), 1e-3);
  const Eigen::VectorXd base = solve(make_opf_problem(p, d, 0.5)).generation;
  for (double beta : {1e-3, 7.3, 1e3}) {
    const Eigen::VectorXd scaled = solve(make_opf_problem(p, beta * d, 0.5)).generation;
    CHECK((scaled - beta * base).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, beta));
  }
}

TEST_CASE("solve is invariant under edge relabeling") {
  // Reversing the edge list permutes every pivot decision; the minimizer is
  // unique, so the result must not move.
  Rng rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.uniform_int(3, 6);
    const Graph g = random_connected_graph(n, rng);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.uniform01() + 1e-3;
    const double lambda = 0.2 + 0.6 * rng.uniform01();

    Graph reversed = g;
    std::reverse(reversed.edges.begin(), reversed.edges.end());

    auto solve_on = [&](const Graph& graph) {
      const PtdfSystem base = compute_ptdf(graph);
      const PtdfSystem p = compute_ptdf(
          orient_for_demand(graph, {base.v * d, Eigen::VectorXd::Zero(graph.edge_count())}));
      return solve(make_opf_problem(p, d, lambda)).generation;
    };
    CHECK((solve_on(g) - solve_on(reversed)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("active set is stable across small epsilons") {
  Rng rng(108);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = rng.uniform_int(2, 6);
    const Graph g = random_connected_graph(n, rng);
    const Eigen::VectorXd gamma = random_gamma(n, 1.5, rng);
    const PtdfSystem base = compute_ptdf(g);
    const PtdfSystem p =
        compute_ptdf(orient_for_demand(g, {base.v * unit_demand(n), base.v * gamma}));

    std::vector<std::vector<int>> sets;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      sets.push_back(solve(make_opf_problem(p, big_jump_profile(gamma, eps), 0.5)).active_set);
    }
    CHECK(sets[0] == sets[1]);
    CHECK(sets[1] == sets[2]);
  }
}

TEST_CASE("randomized stress: every returned solution is KKT-certified") {
  // Mixed demand regimes across sizes; the only tolerated outcome besides a
  // certified solution is the documented report of a binding g >= 0.
  long solved = 0, reported = 0;
  for (long trial = 0; trial < 2000; ++trial) {
    Rng rng = Rng::for_replica(888, static_cast<std::uint64_t>(trial));
    const int n = rng.uniform_int(2, 8);
    const Graph g = random_connected_graph(n, rng, rng.uniform01());
    const double lambda = 0.02 + 0.96 * rng.uniform01();
    Eigen::VectorXd d(n);
    const int mode = rng.uniform_int(0, 2);
    if (mode == 0) {
      for (int i = 0; i < n; ++i) d(i) = rng.pareto(1.2);
    } else if (mode == 1) {
      const double eps = std::pow(10.0, -7.0 * rng.uniform01());
      d = big_jump_profile(random_gamma(n, 1.5, rng), eps);
    } else {
      for (int i = 0; i < n; ++i) d(i) = 1.0 + 1e-6 * rng.uniform01();
    }
    const PtdfSystem base = compute_ptdf(g);
    const PtdfSystem p = compute_ptdf(
        orient_for_demand(g, {base.v * d, Eigen::VectorXd::Zero(g.edge_count())}));
    try {
      const OpfSolution sol = solve(make_opf_problem(p, d, lambda));
      CHECK(sol.kkt_residual <= 1e-7);
      ++solved;
    } catch (const NumericalFailure& ex) {
      CHECK(std::string(ex.what()).find("negative entry") != std::string::npos);
      ++reported;
    }
  }
  CHECK(solved + reported == 2000);
  CHECK(reported < 5);
}

TEST_CASE("a binding nonnegativity bound is detected, not silently handled") {
  // At a tiny loading factor with a sizable demand perturbation the
  // projection optimum can dip below zero on one node (confirmed by face
  // enumeration); the solver reports it instead of clamping.
  Rng rng = Rng::for_replica(777, 15580);
  const int n = rng.uniform_int(2, 8);
  const Graph g = random_connected_graph(n, rng, rng.uniform01());
  const double lambda = 0.02 + 0.96 * rng.uniform01();
  rng.uniform_int(0, 2);
  const double eps = std::pow(10.0, -7.0 * rng.uniform01());
  const Eigen::VectorXd d = big_jump_profile(random_gamma(n, 1.5, rng), eps);

  const PtdfSystem base = compute_ptdf(g);
  const PtdfSystem p = compute_ptdf(
      orient_for_demand(g, {base.v * d, Eigen::VectorXd::Zero(g.edge_count())}));
  CHECK_THROWS_AS(solve(make_opf_problem(p, d, lambda)), NumericalFailure);
  const OpfSolution oracle = face_enumeration_oracle(make_opf_problem(p, d, lambda));
  CHECK(oracle.generation.minCoeff() < -1e-9);
}

TEST_CASE("oracle refuses oversized instances") {
  // Complete 6-node graph: 2m+1 = 31 hyperplanes exceeds the budget.
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 6; ++i)
    for (int j = i + 1; j <= 6; ++j) edges.emplace_back(i, j);
  const Graph k6 = build_graph(6, edges);
  const PtdfSystem base = compute_ptdf(k6);
  Eigen::VectorXd d(6);
  d << 6, 5, 4, 3, 2, 1;
  const PtdfSystem p =
      compute_ptdf(orient_for_demand(k6, {base.v * d, Eigen::VectorXd::Zero(15)}));
  CHECK_THROWS_AS(face_enumeration_oracle(make_opf_problem(p, d, 0.5)), BudgetExceeded);
}

TEST_CASE("make_opf_problem validates inputs") {
  const PtdfSystem p = compute_ptdf(reference_graph());
  CHECK_THROWS_AS(make_opf_problem(p, unit_demand(6), 1.2), InvalidLoadingFactor);
  CHECK_THROWS_AS(make_opf_problem(p, Eigen::VectorXd::Zero(6), 0.5), PreconditionViolated);
  Eigen::VectorXd negative = unit_demand(6);
  negative(3) = -0.2;
  CHECK_THROWS_AS(make_opf_problem(p, negative, 0.5), PreconditionViolated);
}
