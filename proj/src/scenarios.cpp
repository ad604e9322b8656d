#include "cascadia/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cascadia/errors.hpp"
#include "cascadia/generate.hpp"
#include "cascadia/parallel.hpp"

namespace cascadia {

namespace {

constexpr double kEpsilonStart = 1e-2;
constexpr double kEpsilonFloor = 1e-8;

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

DemandSample sample_pareto_demands(int n, double alpha, Rng& rng) {
  if (n < 2) throw PreconditionViolated("need at least two nodes");
  if (!(alpha > 0)) throw PreconditionViolated("alpha must be positive");
  DemandSample sample;
  sample.x.resize(n);
  for (int i = 0; i < n; ++i) sample.x(i) = rng.pareto(alpha);
  std::tie(sample.y, sample.max_index) = reorder_max_first(sample.x);
  return sample;
}

std::pair<Eigen::VectorXd, int> reorder_max_first(const Eigen::VectorXd& x) {
  Eigen::Index max_idx = 0;
  x.maxCoeff(&max_idx);
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd y(n);
  y(0) = x(max_idx);
  int at = 1;
  for (int i = 0; i < n; ++i) {
    if (i != max_idx) y(at++) = x(i);
  }
  return {y, static_cast<int>(max_idx) + 1};
}

Eigen::VectorXd big_jump_profile(const Eigen::VectorXd& gamma, double epsilon) {
  const int n = static_cast<int>(gamma.size());
  if (n < 2) throw InvalidGamma("gamma needs at least two entries");
  if (std::abs(gamma(0)) > 1e-12) throw InvalidGamma("gamma_1 must be zero");
  if (gamma.minCoeff() < -1e-12) throw InvalidGamma("gamma must be nonnegative");
  if (std::abs(gamma.sum() - 1.0) > 1e-9) throw InvalidGamma("gamma must sum to one");
  if (!(epsilon >= 0)) throw InvalidGamma("epsilon must be nonnegative");
  Eigen::VectorXd d = epsilon * gamma;
  d(0) += 1.0;
  return d;
}

std::pair<Eigen::VectorXd, double> ratios_from_sample(const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  const double rest = y.tail(n - 1).sum();
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(n);
  if (rest > 0) gamma.tail(n - 1) = y.tail(n - 1) / rest;
  return {gamma, rest / y(0)};
}

Eigen::VectorXd place_profile(const Eigen::VectorXd& gamma, double epsilon, int max_node,
                              int node_count) {
  // Inverse of the max-first shift: original node j sits at position j+1
  // (when j < max_node) or j (when j > max_node) of the reordered vector.
  Eigen::VectorXd d(node_count);
  d(max_node - 1) = 1.0;
  for (int j = 1; j <= node_count; ++j) {
    if (j == max_node) continue;
    const int pos = j < max_node ? j + 1 : j;
    d(j - 1) = epsilon * gamma(pos - 1);
  }
  return d;
}

ProfilePipeline::ProfilePipeline(const Graph& g, Eigen::VectorXd gamma, int max_node,
                                 double lambda, double lambda_star, PtdfCache* base_cache)
    : gamma_(std::move(gamma)),
      max_node_(max_node),
      lambda_(lambda),
      lambda_star_(lambda_star) {
  if (max_node_ < 1 || max_node_ > g.node_count)
    throw PreconditionViolated("max_node out of range");
  big_jump_profile(gamma_, 0.0);  // validates gamma

  if (base_cache) {
    cache_ = base_cache;
  } else {
    owned_cache_ = std::make_unique<PtdfCache>(g);
    cache_ = owned_cache_.get();
  }

  gamma_orig_ = place_profile(gamma_, 1.0, max_node_, g.node_count);
  gamma_orig_(max_node_ - 1) = 0.0;

  const PtdfSystem& base = cache_->get(full_mask(g));
  const OrientationSigns signs{base.v.col(max_node_ - 1), base.v * gamma_orig_};
  const Graph oriented = orient_for_demand(g, signs);

  // Oriented full-mask system by flipping base rows; bit-identical to a
  // fresh computation because the Laplacian ignores orientation.
  oriented_system_ = base;
  oriented_system_.graph = oriented;
  for (int e = 1; e <= g.edge_count(); ++e) {
    if (oriented.edges[e - 1] != g.edges[e - 1]) oriented_system_.v.row(e - 1) *= -1.0;
  }
}

Eigen::VectorXd ProfilePipeline::demand_at(double epsilon) const {
  return place_profile(gamma_, epsilon, max_node_, oriented_system_.node_count());
}

const ProfilePipeline::Stage& ProfilePipeline::stage(double epsilon) {
  auto it = stages_.find(epsilon);
  if (it != stages_.end()) return it->second;

  Stage stage;
  stage.demand = demand_at(epsilon);
  try {
    stage.limits = planning_stage(oriented_system_, stage.demand, lambda_, lambda_star_);
    stage.solution = solve(make_opf_problem(oriented_system_, stage.demand, lambda_));
    stage.valid = true;
  } catch (const PreconditionViolated&) {
    stage.valid = false;  // epsilon too large for the fixed orientation
  } catch (const NumericalFailure&) {
    stage.valid = false;
  }
  return stages_.emplace(epsilon, std::move(stage)).first->second;
}

ProfilePipeline::Run ProfilePipeline::run(double epsilon, int first_edge,
                                          const TieBreakRule& rule, bool record_trace) {
  Run out;
  const Stage& st = stage(epsilon);
  if (!st.valid) return out;

  CascadeTrace trace = run_cascade(cache_->graph(), st.demand, st.solution.generation,
                                   st.limits, first_edge, rule, cache_, record_trace);
  out.valid = true;
  out.i_star = st.solution.active_set;
  out.z = trace.disconnected_from_max;
  out.failure_size = trace.failure_size;
  out.end_components = trace.end_components;
  out.failed_steps.reserve(trace.steps.size());
  for (const auto& step : trace.steps) out.failed_steps.push_back(step.failed_edges);
  if (record_trace) out.trace = std::move(trace);
  return out;
}

std::optional<OpfSolution> ProfilePipeline::solution(double epsilon) {
  const Stage& st = stage(epsilon);
  if (!st.valid) return std::nullopt;
  return st.solution;
}

std::optional<Eigen::MatrixXd> ProfilePipeline::generation_map(double epsilon) {
  const Stage& st = stage(epsilon);
  if (!st.valid) return std::nullopt;
  return projection_matrix(oriented_system_, st.solution.active_set, lambda_);
}

StabilizeOutcome stabilize_with(ProfilePipeline& pipeline, int first_edge,
                                const TieBreakRule& rule) {
  StabilizeOutcome out;
  ProfilePipeline::Run previous;
  bool have_previous = false;
  for (double eps = kEpsilonStart; eps >= kEpsilonFloor; eps *= 0.5) {
    ProfilePipeline::Run current = pipeline.run(eps, first_edge, rule);
    if (current.valid && have_previous && previous.valid &&
        current.failed_steps == previous.failed_steps && current.i_star == previous.i_star) {
      out.stabilized = true;
      out.epsilon_star = eps;
      out.z = current.z;
      out.i_star = std::move(current.i_star);
      out.failed_steps = std::move(current.failed_steps);
      out.end_components = std::move(current.end_components);
      return out;
    }
    previous = std::move(current);
    have_previous = true;
  }
  return out;
}

StabilizeOutcome stabilize_epsilon(const Graph& g, const Eigen::VectorXd& gamma, int max_node,
                                   int first_edge, const TieBreakRule& rule, double lambda,
                                   double lambda_star) {
  ProfilePipeline pipeline(g, gamma, max_node, lambda, lambda_star);
  return stabilize_with(pipeline, first_edge, rule);
}

namespace {

void validate_scenario_params(double alpha, double lambda, double lambda_star, long replicas) {
  if (!(alpha > 0)) throw PreconditionViolated("alpha must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidLoadingFactor("lambda must lie in (0, 1)");
  if (!(lambda_star >= lambda))
    throw InvalidLoadingFactor("lambda_star must be at least lambda");
  if (replicas < 1) throw PreconditionViolated("need at least one replica");
}

}  // namespace

PartitionTable estimate_partition_probs(const Graph& g, double alpha, double lambda,
                                        double lambda_star, const TieBreakRule& rule,
                                        long replicas, std::uint64_t seed, int threads) {
  validate_scenario_params(alpha, lambda, lambda_star, replicas);
  const int n = g.node_count;
  const int m = g.edge_count();

  struct WorkerOut {
    std::map<ScenarioKey, long> counts;
    long nostab = 0;
    long runs = 0;
  };
  std::vector<WorkerOut> workers(static_cast<std::size_t>(std::max(1, threads)));

  parallel_chunks(0, replicas, threads, [&](long lo, long hi, int worker) {
    WorkerOut& out = workers[static_cast<std::size_t>(worker)];
    PtdfCache cache(g);
    for (long rep = lo; rep < hi; ++rep) {
      Rng rng = Rng::for_replica(seed, static_cast<std::uint64_t>(rep));
      const Eigen::VectorXd gamma = random_gamma(n, alpha, rng);
      // Every (max node, first edge) cell is evaluated on this draw; the
      // conditional law of the ratios does not depend on the cell.
      for (int i = 1; i <= n; ++i) {
        ProfilePipeline pipeline(g, gamma, i, lambda, lambda_star, &cache);
        for (int l = 1; l <= m; ++l) {
          ++out.runs;
          const StabilizeOutcome sr = stabilize_with(pipeline, l, rule);
          if (!sr.stabilized) {
            ++out.nostab;
            continue;
          }
          ++out.counts[ScenarioKey{i, l, sr.z, sr.i_star}];
        }
      }
    }
  });

  PartitionTable table;
  table.replicas = replicas;
  for (const auto& w : workers) {
    table.nostab += w.nostab;
    table.total_runs += w.runs;
    for (const auto& [key, count] : w.counts) table.counts[key] += count;
  }
  table.nostab_fraction =
      table.total_runs == 0 ? 0.0 : static_cast<double>(table.nostab) / table.total_runs;

  std::map<std::pair<int, int>, long> cell_totals;
  for (const auto& [key, count] : table.counts)
    cell_totals[{key.max_node, key.first_edge}] += count;
  for (const auto& [key, count] : table.counts) {
    table.probability[key] =
        static_cast<double>(count) / cell_totals[{key.max_node, key.first_edge}];
  }
  return table;
}

double theoretical_constant(const PartitionTable& probs, double lambda, int node_count,
                            int edge_count, double alpha, double k_constant) {
  double c = 0;
  for (const auto& [key, probability] : probs.probability) {
    if (key.disconnected == 0) continue;
    c += (k_constant / edge_count) *
         std::pow(lambda * key.disconnected / node_count, alpha) * probability;
  }
  return c;
}

double hill_estimator(const std::vector<double>& values, int k) {
  std::vector<double> positive;
  positive.reserve(values.size());
  for (double v : values) {
    if (v > 0) positive.push_back(v);
  }
  if (k < 1 || k >= static_cast<int>(positive.size()))
    throw InsufficientData("hill estimator needs 1 <= k < number of positive values");
  std::nth_element(positive.begin(), positive.begin() + k, positive.end(),
                   std::greater<double>());
  const double pivot = positive[k];  // (k+1)-th largest
  double log_sum = 0;
  for (int i = 0; i < k; ++i) log_sum += std::log(positive[i] / pivot);
  if (!(log_sum > 0)) throw InsufficientData("top order statistics are all equal");
  return k / log_sum;
}

TailEstimate monte_carlo_tail(const Graph& g, double alpha, double lambda, double lambda_star,
                              const TieBreakRule& rule, const TailOptions& options) {
  validate_scenario_params(alpha, lambda, lambda_star, options.replicas);
  const int n = g.node_count;
  const int m = g.edge_count();
  const long replicas = options.replicas;

  std::vector<double> failure_sizes(static_cast<std::size_t>(replicas), 0.0);
  std::vector<double> bigjump_ratio(static_cast<std::size_t>(replicas), 0.0);
  std::vector<char> failed(static_cast<std::size_t>(replicas), 0);

  parallel_chunks(0, replicas, options.threads, [&](long lo, long hi, int) {
    PtdfCache cache(g);
    const PtdfSystem& base = cache.get(full_mask(g));
    for (long rep = lo; rep < hi; ++rep) {
      Rng rng = Rng::for_replica(options.seed, static_cast<std::uint64_t>(rep));
      Eigen::VectorXd demand(n);
      for (int i = 0; i < n; ++i) demand(i) = rng.pareto(alpha);
      const int first_edge = rng.uniform_int(1, m);

      Eigen::Index max_idx = 0;
      const double peak = demand.maxCoeff(&max_idx);
      bigjump_ratio[static_cast<std::size_t>(rep)] = (demand.sum() - peak) / peak;

      try {
        // Orient so V d >= 0; the cascade itself is orientation-invariant
        // and runs against the base frame to share the PTDF cache.
        const Eigen::VectorXd w = base.v * demand;
        EdgeMask flips = 0;
        for (int e = 1; e <= m; ++e) {
          if (w(e - 1) < 0) flips |= edge_bit(e);
        }
        PtdfSystem oriented = base;
        oriented.graph = flip_edges(g, flips);
        for (int e = 1; e <= m; ++e) {
          if (flips & edge_bit(e)) oriented.v.row(e - 1) *= -1.0;
        }

        const LimitSet limits = planning_stage(base, demand, lambda, lambda_star);
        const OpfSolution sol = solve(make_opf_problem(oriented, demand, lambda));
        const CascadeTrace trace = run_cascade(g, demand, sol.generation, limits, first_edge,
                                               rule, &cache, /*record_states=*/false);
        failure_sizes[static_cast<std::size_t>(rep)] = trace.failure_size;
      } catch (const std::runtime_error&) {
        failed[static_cast<std::size_t>(rep)] = 1;
      }
    }
  });

  TailEstimate estimate;
  estimate.sample_count = replicas;
  for (char f : failed) estimate.solver_failures += f;

  long zero_count = 0;
  for (double s : failure_sizes) {
    if (!(s > 0)) ++zero_count;
  }
  estimate.zero_fraction = static_cast<double>(zero_count) / replicas;

  // Empirical survival on a log grid between the 90th percentile and the max.
  std::vector<double> sorted = failure_sizes;
  std::sort(sorted.begin(), sorted.end());
  const double s_max = sorted.back();
  if (s_max > 0) {
    double lo = sorted[static_cast<std::size_t>(0.9 * (replicas - 1))];
    if (!(lo > 0)) {
      const auto first_positive = std::upper_bound(sorted.begin(), sorted.end(), 0.0);
      lo = *first_positive;
    }
    if (lo >= s_max) lo = s_max * 0.5;
    const int points = 40;
    for (int i = 0; i < points; ++i) {
      const double x =
          std::exp(std::log(lo) + (std::log(s_max) - std::log(lo)) * i / (points - 1));
      const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x);
      estimate.survival_points.emplace_back(x, static_cast<double>(above) / replicas);
    }

    std::vector<double> plateau;
    for (const auto& [x, p] : estimate.survival_points) {
      if (x >= s_max / 10.0 && p > 0) plateau.push_back(std::pow(x, alpha) * p);
    }
    estimate.c_hat_empirical = median(plateau);
  }

  estimate.hill_k = options.hill_k > 0
                        ? options.hill_k
                        : static_cast<int>(std::ceil(0.005 * static_cast<double>(replicas)));
  try {
    estimate.hill_alpha = hill_estimator(failure_sizes, estimate.hill_k);
    estimate.hill_valid = true;
  } catch (const InsufficientData&) {
    estimate.hill_alpha = std::numeric_limits<double>::quiet_NaN();
    estimate.hill_valid = false;
  }

  // Share of big-jump demand profiles among the top 0.1% of failure sizes.
  const long top_count = std::max<long>(1, replicas / 1000);
  std::vector<long> order(static_cast<std::size_t>(replicas));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + top_count, order.end(),
                    [&](long a, long b) {
                      if (failure_sizes[a] != failure_sizes[b])
                        return failure_sizes[a] > failure_sizes[b];
                      return a < b;
                    });
  long dominated = 0;
  for (long i = 0; i < top_count; ++i) {
    if (bigjump_ratio[static_cast<std::size_t>(order[i])] < 0.1) ++dominated;
  }
  estimate.big_jump_top_fraction = static_cast<double>(dominated) / top_count;

  const long partition_replicas =
      options.partition_replicas > 0 ? options.partition_replicas : std::min<long>(replicas, 20000);
  estimate.partition = estimate_partition_probs(g, alpha, lambda, lambda_star, rule,
                                                partition_replicas,
                                                options.seed ^ 0x9e3779b97f4a7c15ULL,
                                                options.threads);
  estimate.c_theoretical = theoretical_constant(estimate.partition, lambda, n, m, alpha, 1.0);
  return estimate;
}

ConjectureReport tie_break_invariance_experiment(const std::vector<Graph>& graphs, double alpha,
                                                 double lambda, double lambda_star,
                                                 const std::vector<TieBreakRule>& rules,
                                                 int gammas_per_graph, std::uint64_t seed,
                                                 int threads) {
  if (rules.size() < 2) throw PreconditionViolated("need at least two tie-break rules");
  validate_scenario_params(alpha, lambda, lambda_star, 1);

  struct WorkerOut {
    long instances = 0, stabilized = 0, agreements = 0, nostab = 0;
    std::vector<ConjectureCounterexample> counterexamples;
  };
  std::vector<WorkerOut> workers(static_cast<std::size_t>(std::max(1, threads)));

  parallel_chunks(0, static_cast<long>(graphs.size()), threads, [&](long lo, long hi, int worker) {
    WorkerOut& out = workers[static_cast<std::size_t>(worker)];
    for (long gi = lo; gi < hi; ++gi) {
      const Graph& graph = graphs[static_cast<std::size_t>(gi)];
      PtdfCache cache(graph);
      for (int t = 0; t < gammas_per_graph; ++t) {
        Rng rng = Rng::for_replica(seed, static_cast<std::uint64_t>(gi) * 1000003ULL +
                                             static_cast<std::uint64_t>(t));
        const Eigen::VectorXd gamma = random_gamma(graph.node_count, alpha, rng);
        for (int i = 1; i <= graph.node_count; ++i) {
          // One pipeline per (gamma, i): the planning/solve stages do not
          // depend on the first edge or the rule, so they are shared.
          ProfilePipeline pipeline(graph, gamma, i, lambda, lambda_star, &cache);
          for (int l = 1; l <= graph.edge_count(); ++l) {
            ++out.instances;
            std::vector<StabilizeOutcome> outcomes;
            bool all_stabilized = true;
            for (std::size_t r = 0; r < rules.size(); ++r) {
              outcomes.push_back(stabilize_with(pipeline, l, rules[r]));
              all_stabilized = all_stabilized && outcomes.back().stabilized;
            }
            if (!all_stabilized) {
              ++out.nostab;
              continue;
            }
            ++out.stabilized;
            bool agree = true;
            for (std::size_t r = 1; r < outcomes.size(); ++r)
              agree = agree && outcomes[r].end_components == outcomes[0].end_components;
            if (agree) {
              ++out.agreements;
              continue;
            }
            ConjectureCounterexample cx;
            cx.graph = graph;
            cx.gamma = gamma;
            cx.max_node = i;
            cx.first_edge = l;
            for (std::size_t r = 0; r < rules.size(); ++r) {
              auto rerun = pipeline.run(outcomes[r].epsilon_star, l, rules[r], true);
              cx.traces.emplace_back(to_string(rules[r].kind), std::move(rerun.trace));
            }
            out.counterexamples.push_back(std::move(cx));
          }
        }
      }
    }
  });

  ConjectureReport report;
  report.graphs = static_cast<long>(graphs.size());
  for (auto& w : workers) {
    report.instances += w.instances;
    report.stabilized += w.stabilized;
    report.agreements += w.agreements;
    report.nostab += w.nostab;
    for (auto& cx : w.counterexamples) report.counterexamples.push_back(std::move(cx));
  }
  return report;
}

}  // namespace cascadia
