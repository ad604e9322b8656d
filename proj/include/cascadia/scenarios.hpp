#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cascadia/cascade.hpp"
#include "cascadia/dcopf.hpp"
#include "cascadia/rng.hpp"

namespace cascadia {

struct DemandSample {
  Eigen::VectorXd x;  // i.i.d. Pareto draws
  Eigen::VectorXd y;  // x with the maximum shifted to the front
  int max_index = 0;  // 1-based position of the maximum in x
};

DemandSample sample_pareto_demands(int n, double alpha, Rng& rng);

// (x_i, x_1, ..., x_{i-1}, x_{i+1}, ..., x_n) with i the argmax.
std::pair<Eigen::VectorXd, int> reorder_max_first(const Eigen::VectorXd& x);

// d(eps, gamma) = e1 + eps * gamma. Requires gamma_1 = 0, gamma >= 0,
// sum gamma = 1, eps >= 0.
Eigen::VectorXd big_jump_profile(const Eigen::VectorXd& gamma, double epsilon);

// Inverse of the above for a max-first sample y: gamma carries the ratios of
// the non-maximal entries, eps their total relative to the maximum.
std::pair<Eigen::VectorXd, double> ratios_from_sample(const Eigen::VectorXd& y);

// Places the normalized profile back into the original labeling: node
// `max_node` carries the unit demand, the remaining gamma entries follow the
// max-first ordering convention.
Eigen::VectorXd place_profile(const Eigen::VectorXd& gamma, double epsilon, int max_node,
                              int node_count);

// One fixed (graph, gamma, max-node) scenario, reusable across epsilons,
// first edges and tie-break rules. Orientation is fixed once from the
// (e1, gamma) signs; planning and the dispatch solve are memoized per
// epsilon. Cascades run against the base graph: failed-edge sets, thetas,
// failure sizes and partitions do not depend on edge orientation, which lets
// one PTDF cache serve every scenario on the same graph. Not thread safe.
class ProfilePipeline {
 public:
  ProfilePipeline(const Graph& g, Eigen::VectorXd gamma, int max_node, double lambda,
                  double lambda_star, PtdfCache* base_cache = nullptr);

  struct Run {
    bool valid = false;          // false when epsilon is too large for the
                                 // fixed orientation or the solve failed
    std::vector<std::vector<int>> failed_steps;
    int z = 0;
    std::vector<int> i_star;
    double failure_size = 0;
    ComponentPartition end_components;
    CascadeTrace trace;          // populated only when requested
  };

  Run run(double epsilon, int first_edge, const TieBreakRule& rule, bool record_trace = false);

  const Graph& oriented_graph() const { return oriented_system_.graph; }
  int max_node() const { return max_node_; }
  Eigen::VectorXd demand_at(double epsilon) const;

  // Solution artifacts at one epsilon (nullopt when invalid there).
  std::optional<OpfSolution> solution(double epsilon);
  std::optional<Eigen::MatrixXd> generation_map(double epsilon);  // A_{I*}

 private:
  struct Stage {
    bool valid = false;
    Eigen::VectorXd demand;
    LimitSet limits;
    OpfSolution solution;
  };
  const Stage& stage(double epsilon);

  Eigen::VectorXd gamma_;       // max-first convention, gamma[0] = 0
  Eigen::VectorXd gamma_orig_;  // original labeling
  int max_node_;
  double lambda_, lambda_star_;
  std::unique_ptr<PtdfCache> owned_cache_;
  PtdfCache* cache_;            // keyed on the base graph
  PtdfSystem oriented_system_;  // full-mask system in the oriented frame
  std::map<double, Stage> stages_;
};

struct StabilizeOutcome {
  bool stabilized = false;
  double epsilon_star = 0;  // smaller of the two agreeing epsilons
  int z = 0;
  std::vector<int> i_star;
  std::vector<std::vector<int>> failed_steps;
  ComponentPartition end_components;
};

// Operationalizes "for all epsilon sufficiently small": halve from 1e-2
// until two consecutive epsilons produce identical per-step failed-edge sets
// and identical active sets; give up (stabilized = false) below 1e-8.
StabilizeOutcome stabilize_epsilon(const Graph& g, const Eigen::VectorXd& gamma, int max_node,
                                   int first_edge, const TieBreakRule& rule, double lambda,
                                   double lambda_star);

// Same search on an existing pipeline (shares memoized solves).
StabilizeOutcome stabilize_with(ProfilePipeline& pipeline, int first_edge,
                                const TieBreakRule& rule);

struct ScenarioKey {
  int max_node = 0;
  int first_edge = 0;
  int disconnected = 0;
  std::vector<int> active_set;

  auto operator<=>(const ScenarioKey&) const = default;
};

struct PartitionTable {
  // P(z, I* | max node, first edge): conditional per (max_node, first_edge)
  // cell, so each cell's probabilities sum to 1 over its stabilized draws.
  std::map<ScenarioKey, double> probability;
  std::map<ScenarioKey, long> counts;
  long replicas = 0;
  long nostab = 0;
  long total_runs = 0;
  double nostab_fraction = 0;
};

PartitionTable estimate_partition_probs(const Graph& g, double alpha, double lambda,
                                        double lambda_star, const TieBreakRule& rule,
                                        long replicas, std::uint64_t seed, int threads = 1);

// C = sum over keys of (K/m) (lambda z / n)^alpha P(key | max node, first edge).
double theoretical_constant(const PartitionTable& probs, double lambda, int node_count,
                            int edge_count, double alpha, double k_constant);

// alpha_hat = k / sum_{i<=k} ln(v_(i) / v_(k+1)) over the k largest positive
// values. Throws InsufficientData when k is out of range or the top values
// are all equal.
double hill_estimator(const std::vector<double>& values, int k);

struct TailEstimate {
  std::vector<std::pair<double, double>> survival_points;  // (x, P(S > x))
  double hill_alpha = 0;
  int hill_k = 0;
  double c_hat_empirical = 0;
  double c_theoretical = 0;
  long sample_count = 0;
  bool hill_valid = false;
  double zero_fraction = 0;         // replicas ending with S = 0
  long solver_failures = 0;
  double big_jump_top_fraction = 0; // among the top 0.1% of S: share of
                                    // replicas with sum of non-max demands
                                    // below 0.1 x max demand
  PartitionTable partition;
};

struct TailOptions {
  long replicas = 100000;
  std::uint64_t seed = 1;
  int hill_k = 0;               // 0: ceil(0.5% of replicas)
  int threads = 1;
  long partition_replicas = 0;  // 0: min(replicas, 20000)
};

// Monte Carlo over raw Pareto demands: per replica sample demands, orient,
// plan, solve the dispatch, fail one uniformly random edge, cascade, record
// the failure size. Deterministic given (seed, options), whatever the thread
// count.
TailEstimate monte_carlo_tail(const Graph& g, double alpha, double lambda, double lambda_star,
                              const TieBreakRule& rule, const TailOptions& options);

struct ConjectureCounterexample {
  Graph graph;
  Eigen::VectorXd gamma;
  int max_node = 0;
  int first_edge = 0;
  std::vector<std::pair<std::string, CascadeTrace>> traces;  // rule name -> trace
};

struct ConjectureReport {
  long graphs = 0;
  long instances = 0;   // (graph, gamma, max node, first edge) tuples
  long stabilized = 0;  // instances stabilized under every rule
  long agreements = 0;  // stabilized instances with identical end partitions
  long nostab = 0;
  std::vector<ConjectureCounterexample> counterexamples;
};

// Runs stabilized cascades under every rule for each (graph, gamma, i, l)
// and compares the end-of-cascade component partitions.
ConjectureReport tie_break_invariance_experiment(const std::vector<Graph>& graphs, double alpha,
                                                 double lambda, double lambda_star,
                                                 const std::vector<TieBreakRule>& rules,
                                                 int gammas_per_graph, std::uint64_t seed,
                                                 int threads = 1);

}  // namespace cascadia
