#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cascadia/ptdf.hpp"

namespace cascadia {

enum class TieBreakKind { BreakAll, SmallestLabel, LargestLabel };

// Deterministic tie-breaking rule: maps the set of exceedance maximizers to
// the nonempty subset of edges that fail this step.
struct TieBreakRule {
  TieBreakKind kind = TieBreakKind::BreakAll;

  std::vector<int> apply(const std::vector<int>& maximizers) const;
};

TieBreakRule tie_break_rule_from_string(const std::string& name);
const char* to_string(TieBreakKind kind);

struct NetworkState {
  Eigen::VectorXd demand;
  Eigen::VectorXd generation;
  EdgeMask surviving = 0;
  Eigen::VectorXd flow;  // full length m, zeros on removed edges
};

struct ComponentTheta {
  int component = 0;
  double theta = 1.0;
};

// Per component with demand/generation ratio theta: scale demand down by
// 1/theta when theta >= 1, generation down by theta when theta <= 1.
// Degenerate components (one resource sums to zero) shed the other entirely.
// Flows are left untouched; recompute them against the surviving PTDF.
NetworkState restore_balance(const NetworkState& state, const ComponentPartition& parts,
                             std::vector<ComponentTheta>* thetas = nullptr);

// psi_e = |f_e| / F_e on surviving edges; removed edges get the sentinel -1.
// Zero-capacity edges: +inf when carrying |flow| > 1e-12, else 0.
Eigen::VectorXd exceedances(const NetworkState& state, const LimitSet& limits);

// Empty iff max psi <= 1 (the cascade stops). Otherwise the maximizer set
// {e : psi_e >= (1-rel_tol) max psi} filtered through the rule.
std::vector<int> select_failures(const Eigen::VectorXd& psi, EdgeMask surviving,
                                 const TieBreakRule& rule, double rel_tol = 1e-9);

struct CascadeStep {
  std::vector<int> failed_edges;
  std::vector<ComponentTheta> thetas;
  NetworkState post_state;  // empty vectors when state recording is off
};

struct CascadeTrace {
  std::vector<CascadeStep> steps;
  Eigen::VectorXd end_demand;
  ComponentPartition end_components;
  double failure_size = 0;       // S = sum_i (d_i - d_i_end)
  int disconnected_from_max = 0; // z, relative to the max-demand node
};

// Emergency stage. The first edge is exogenous and removed regardless of its
// exceedance; afterwards each step removes the rule's selection, recomputes
// the PTDF, restores balance per component and re-evaluates exceedances
// until none exceeds 1. Terminates within m steps.
CascadeTrace run_cascade(const Graph& g, const Eigen::VectorXd& demand,
                         const Eigen::VectorXd& generation, const LimitSet& limits,
                         int first_edge, const TieBreakRule& rule, PtdfCache* cache = nullptr,
                         bool record_states = true);

double total_failure_size(const CascadeTrace& trace);

}  // namespace cascadia
