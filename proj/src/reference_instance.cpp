#include "cascadia/reference_instance.hpp"

#include <cmath>
#include <sstream>

#include "cascadia/cascade.hpp"
#include "cascadia/dcopf.hpp"
#include "cascadia/ptdf.hpp"
#include "cascadia/scenarios.hpp"
#include "cascadia/ties.hpp"

namespace cascadia {

namespace {

// 6-node, 11-edge network where three edges tie for the maximal exceedance
// at the fourth cascade step; edge labels are the positions below.
const std::vector<std::pair<int, int>> kEdges = {
    {2, 1}, {3, 1}, {4, 1}, {5, 1}, {2, 3}, {2, 4}, {2, 5}, {6, 2}, {4, 3}, {5, 3}, {5, 4}};

constexpr double kV30[11][6] = {
    {7, -5, 1, 1, 1, -5},  {6, 0, -6, 0, 0, 0},  {6, 0, 0, -6, 0, 0},  {6, 0, 0, 0, -6, 0},
    {1, -5, 7, 1, 1, -5},  {1, -5, 1, 7, 1, -5}, {1, -5, 1, 1, 7, -5}, {5, 5, 5, 5, 5, -25},
    {0, 0, 6, -6, 0, 0},   {0, 0, 6, 0, -6, 0},  {0, 0, 0, 6, -6, 0}};

constexpr double kV24[11][6] = {
    {6, -6, 0, 0, 6, -6},   {5, -1, -7, -1, 5, -1}, {5, -1, -1, -7, 5, -1},
    {4, 4, 4, 4, -20, 4},   {1, -5, 7, 1, 1, -5},   {1, -5, 1, 7, 1, -5},
    {0, 0, 0, 0, 0, 0},     {4, 4, 4, 4, 4, -20},   {0, 0, 6, -6, 0, 0},
    {0, 0, 0, 0, 0, 0},     {0, 0, 0, 0, 0, 0}};

std::string edge_set_text(const std::vector<int>& edges) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < edges.size(); ++i) os << (i ? "," : "") << edges[i];
  os << "}";
  return os.str();
}

}  // namespace

const Graph& reference_graph() {
  static const Graph graph = build_graph(6, kEdges);
  return graph;
}

Eigen::VectorXd reference_gamma() {
  Eigen::VectorXd gamma(6);
  gamma << 0.0, 0.10, 0.30, 0.28, 0.27, 0.05;
  return gamma;
}

Eigen::MatrixXd reference_v() {
  Eigen::MatrixXd v(11, 6);
  for (int e = 0; e < 11; ++e)
    for (int i = 0; i < 6; ++i) v(e, i) = kV30[e][i] / 30.0;
  return v;
}

Eigen::MatrixXd reference_v_reduced() {
  Eigen::MatrixXd v(11, 6);
  for (int e = 0; e < 11; ++e)
    for (int i = 0; i < 6; ++i) v(e, i) = kV24[e][i] / 24.0;
  return v;
}

const std::vector<int>& reference_failure_prefix() {
  static const std::vector<int> prefix = {7, 11, 10};
  return prefix;
}

const std::vector<int>& reference_tied_edges() {
  static const std::vector<int> tied = {5, 6, 9};
  return tied;
}

double reference_psi1_factor() { return 22.0 / 21.0; }
double reference_psi4_factor() { return 17.0 / 18.0; }
double reference_psi5_factor() { return 4.0 / 3.0; }
double reference_tie_factor() { return 5.0 / 4.0; }

ReproReport run_reference_checks(const ReproOptions& options) {
  ReproReport report;
  auto check = [&report](bool ok, const std::string& label, const std::string& detail) {
    std::ostringstream os;
    os << (ok ? "ok   " : "FAIL ") << label << ": " << detail;
    report.checks.push_back(os.str());
    if (!ok) {
      report.ok = false;
      report.failures.push_back(label + ": " + detail);
    }
  };

  const Graph& graph = reference_graph();
  const double lambda = options.lambda;
  const double lambda_star = options.lambda_star;

  Eigen::MatrixXd v_expected = reference_v();
  if (options.corrupt_fixture) v_expected(0, 0) += 1e-3;  // self-test of the diff

  const PtdfSystem full = compute_ptdf(graph);
  {
    const double err = (full.v - v_expected).cwiseAbs().maxCoeff();
    std::ostringstream os;
    os << "max |dV| = " << err;
    check(err <= 1e-9, "ptdf full graph", os.str());
  }
  {
    EdgeMask surviving = full_mask(graph);
    for (int e : {7, 10, 11}) surviving &= ~edge_bit(e);
    const PtdfSystem reduced = compute_ptdf(graph, surviving);
    const double err = (reduced.v - reference_v_reduced()).cwiseAbs().maxCoeff();
    std::ostringstream os;
    os << "max |dV| = " << err;
    check(err <= 1e-9, "ptdf after removing edges 7,10,11", os.str());
  }

  // Cascade from the bundled demand ratios, first failure at edge 7.
  ProfilePipeline pipeline(graph, reference_gamma(), 1, lambda, lambda_star);
  auto run = pipeline.run(options.epsilon, 7, TieBreakRule{TieBreakKind::BreakAll}, true);
  check(run.valid, "pipeline", run.valid ? "planning and dispatch solved" : "solve failed");
  if (!run.valid) return report;

  const std::vector<std::vector<int>> published = {{7}, {11}, {10}, {5, 6, 9}};
  if (options.high_emergency) {
    // Emergency limits at or above 5/4 of the operational ratio: the tie
    // never exceeds 1 and the cascade ends after edge 10.
    const std::vector<std::vector<int>> expected = {{7}, {11}, {10}};
    check(run.failed_steps == expected, "cascade order (high emergency)",
          "got " + [&] {
            std::string s;
            for (const auto& step : run.failed_steps) s += edge_set_text(step);
            return s;
          }());
    check(run.z == 0 && std::abs(run.failure_size) <= 1e-12, "no disconnection",
          "z = " + std::to_string(run.z));
    return report;
  }

  {
    bool prefix_ok = run.failed_steps.size() >= published.size();
    for (std::size_t i = 0; prefix_ok && i < published.size(); ++i)
      prefix_ok = run.failed_steps[i] == published[i];
    std::string got;
    for (const auto& step : run.failed_steps) got += edge_set_text(step);
    check(prefix_ok, "cascade order", "got " + got);
  }

  // Exceedance ratios right after the first failure, in units of
  // lambda/lambda*; the published values hold up to O(epsilon). Limits come
  // from |V d| and do not depend on the orientation.
  const LimitSet limits =
      planning_stage(full, pipeline.demand_at(options.epsilon), lambda, lambda_star);
  if (!run.trace.steps.empty()) {
    const Eigen::VectorXd psi1 = exceedances(run.trace.steps[0].post_state, limits);
    const double unit = lambda / lambda_star;
    auto near = [&](double value, double factor) {
      return std::abs(value - factor * unit) <= 1e-3;
    };
    std::ostringstream os;
    os << "psi1 = " << psi1(0) << ", psi4 = " << psi1(3) << ", psi5 = " << psi1(4)
       << ", psi6 = " << psi1(5);
    check(near(psi1(0), reference_psi1_factor()) && near(psi1(3), reference_psi4_factor()) &&
              near(psi1(4), reference_psi5_factor()) && near(psi1(5), reference_psi5_factor()),
          "exceedances after edge 7", os.str());
  }
  if (run.trace.steps.size() >= 4) {
    const Eigen::VectorXd psi3 = exceedances(run.trace.steps[2].post_state, limits);
    double tie_value = -1;
    for (int e : reference_tied_edges()) tie_value = std::max(tie_value, psi3(e - 1));
    const double expected = reference_tie_factor() * lambda / lambda_star;
    double spread = 0;
    for (int e : reference_tied_edges())
      spread = std::max(spread, std::abs(psi3(e - 1) - expected));
    std::ostringstream os;
    os << "tie value " << tie_value << " vs " << expected << " (spread " << spread << ")";
    check(spread <= 1e-6, "tied exceedance at step 4", os.str());
  }

  // The tie is exact for every demand in the region, which shows as
  // skew-symmetry of Q (A - I) for each tied pair.
  {
    bool all_skew = true;
    const auto& tied = reference_tied_edges();
    for (std::size_t a = 0; a < tied.size(); ++a) {
      for (std::size_t b = a + 1; b < tied.size(); ++b) {
        const TieAnalysis analysis =
            analyze_tie(graph, reference_gamma(), lambda, lambda_star, options.epsilon,
                        reference_failure_prefix(), tied[a], tied[b]);
        all_skew = all_skew && analysis.applicable && analysis.skew_symmetric;
      }
    }
    check(all_skew, "skew symmetry of tied pairs", all_skew ? "all pairs" : "some pair failed");
  }

  // Past the published tie the four hub edges cannot carry the lost supply:
  // edge 1 overloads, splitting off {2, 6}. Derived by hand from the
  // surviving tree flows; kept as a regression anchor.
  if (run.failed_steps.size() >= 5) {
    check(run.failed_steps[4] == std::vector<int>{1}, "continuation after the tie",
          "step 5 = " + edge_set_text(run.failed_steps[4]));
    std::ostringstream os;
    os << "z = " << run.z << ", S = " << run.failure_size;
    check(run.z == 2 && std::abs(run.failure_size - 1.0 / 6.0) <= 1e-3, "end state", os.str());
  } else {
    check(false, "continuation after the tie", "cascade ended early");
  }
  return report;
}

}  // namespace cascadia
