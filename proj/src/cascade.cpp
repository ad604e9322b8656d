#include "cascadia/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cascadia/errors.hpp"

namespace cascadia {

std::vector<int> TieBreakRule::apply(const std::vector<int>& maximizers) const {
  if (maximizers.empty()) return {};
  switch (kind) {
    case TieBreakKind::BreakAll:
      return maximizers;
    case TieBreakKind::SmallestLabel:
      return {*std::min_element(maximizers.begin(), maximizers.end())};
    case TieBreakKind::LargestLabel:
      return {*std::max_element(maximizers.begin(), maximizers.end())};
  }
  return maximizers;
}

TieBreakRule tie_break_rule_from_string(const std::string& name) {
  if (name == "break_all") return {TieBreakKind::BreakAll};
  if (name == "smallest_label") return {TieBreakKind::SmallestLabel};
  if (name == "largest_label") return {TieBreakKind::LargestLabel};
  throw PreconditionViolated("unknown tie-break rule: " + name);
}

const char* to_string(TieBreakKind kind) {
  switch (kind) {
    case TieBreakKind::BreakAll:
      return "break_all";
    case TieBreakKind::SmallestLabel:
      return "smallest_label";
    case TieBreakKind::LargestLabel:
      return "largest_label";
  }
  return "?";
}

NetworkState restore_balance(const NetworkState& state, const ComponentPartition& parts,
                             std::vector<ComponentTheta>* thetas) {
  if (static_cast<Eigen::Index>(parts.assignment.size()) != state.demand.size() ||
      state.generation.size() != state.demand.size())
    throw DimensionMismatch("partition and state sizes disagree");
  NetworkState out = state;
  if (thetas) thetas->clear();

  for (int id = 1; id <= parts.component_count; ++id) {
    double demand_sum = 0;
    double generation_sum = 0;
    for (int node = 1; node <= static_cast<int>(parts.assignment.size()); ++node) {
      if (parts.assignment[node - 1] != id) continue;
      demand_sum += state.demand(node - 1);
      generation_sum += state.generation(node - 1);
    }

    double theta = 1.0;
    const double span = std::max({demand_sum, generation_sum, 1e-300});
    if (generation_sum <= 0.0 && demand_sum > 0.0) {
      theta = std::numeric_limits<double>::infinity();
    } else if (demand_sum <= 0.0 && generation_sum > 0.0) {
      theta = 0.0;
    } else if (generation_sum > 0.0) {
      theta = demand_sum / generation_sum;
    }
    if (thetas) thetas->push_back({id, theta});

    if (std::abs(demand_sum - generation_sum) <= 1e-12 * span) continue;
    for (int node = 1; node <= static_cast<int>(parts.assignment.size()); ++node) {
      if (parts.assignment[node - 1] != id) continue;
      if (std::isinf(theta)) {
        out.demand(node - 1) = 0.0;  // no generation left: shed all demand
      } else if (theta >= 1.0) {
        out.demand(node - 1) = state.demand(node - 1) / theta;
      } else {
        out.generation(node - 1) = theta * state.generation(node - 1);
      }
    }
  }
  return out;
}

Eigen::VectorXd exceedances(const NetworkState& state, const LimitSet& limits) {
  const int m = static_cast<int>(state.flow.size());
  if (limits.emergency.size() != state.flow.size())
    throw DimensionMismatch("limit and flow sizes disagree");
  const double cap_tol = 1e-13 * std::max(1.0, limits.emergency.maxCoeff());
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(m, -1.0);
  for (int e = 1; e <= m; ++e) {
    if (!(state.surviving & edge_bit(e))) continue;
    const double cap = limits.emergency(e - 1);
    const double magnitude = std::abs(state.flow(e - 1));
    if (cap <= cap_tol) {
      psi(e - 1) = magnitude > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      psi(e - 1) = magnitude / cap;
    }
  }
  return psi;
}

std::vector<int> select_failures(const Eigen::VectorXd& psi, EdgeMask surviving,
                                 const TieBreakRule& rule, double rel_tol) {
  double best = -1.0;
  for (int e = 1; e <= static_cast<int>(psi.size()); ++e) {
    if ((surviving & edge_bit(e)) && psi(e - 1) > best) best = psi(e - 1);
  }
  // Strictly-exceeding test with a guard: edges whose active bound is
  // untouched by a removal sit at psi = lambda/lambda* exactly, which equals
  // 1 when lambda* = lambda; rounding noise must not decide those.
  if (!(best > 1.0 + rel_tol)) return {};

  std::vector<int> maximizers;
  const double cut = std::isinf(best) ? best : (1.0 - rel_tol) * best;
  for (int e = 1; e <= static_cast<int>(psi.size()); ++e) {
    if ((surviving & edge_bit(e)) && psi(e - 1) >= cut) maximizers.push_back(e);
  }
  return rule.apply(maximizers);
}

CascadeTrace run_cascade(const Graph& g, const Eigen::VectorXd& demand,
                         const Eigen::VectorXd& generation, const LimitSet& limits,
                         int first_edge, const TieBreakRule& rule, PtdfCache* cache,
                         bool record_states) {
  const int m = g.edge_count();
  if (first_edge < 1 || first_edge > m) throw PreconditionViolated("first_edge out of range");
  if (demand.size() != g.node_count || generation.size() != g.node_count)
    throw DimensionMismatch("demand and generation must have one entry per node");

  std::optional<PtdfCache> local;
  if (!cache) local.emplace(g);
  PtdfCache& ptdf = cache ? *cache : *local;

  NetworkState state;
  state.demand = demand;
  state.generation = generation;
  state.surviving = full_mask(g);
  state.flow = Eigen::VectorXd::Zero(m);

  CascadeTrace trace;
  std::vector<int> to_fail{first_edge};
  const ComponentPartition* parts = nullptr;

  while (!to_fail.empty()) {
    for (int e : to_fail) state.surviving &= ~edge_bit(e);
    parts = &ptdf.components(state.surviving);

    CascadeStep step;
    step.failed_edges = to_fail;
    state = restore_balance(state, *parts, &step.thetas);
    state.flow = state.surviving == 0
                     ? Eigen::VectorXd::Zero(m)
                     : Eigen::VectorXd(ptdf.get(state.surviving).v *
                                       (state.demand - state.generation));
    if (record_states) step.post_state = state;
    trace.steps.push_back(std::move(step));
    if (static_cast<int>(trace.steps.size()) > m) throw NumericalFailure("cascade exceeded m steps");

    to_fail = select_failures(exceedances(state, limits), state.surviving, rule);
  }

  trace.end_demand = state.demand;
  trace.end_components = *parts;
  trace.failure_size = (demand - state.demand).sum();

  Eigen::Index max_idx = 0;
  demand.maxCoeff(&max_idx);  // first maximum: deterministic under ties
  const int max_component = trace.end_components.assignment[max_idx];
  int in_component = 0;
  for (int id : trace.end_components.assignment) {
    if (id == max_component) ++in_component;
  }
  trace.disconnected_from_max = g.node_count - in_component;
  return trace;
}

double total_failure_size(const CascadeTrace& trace) { return trace.failure_size; }

}  // namespace cascadia
