// Command-line front end: opf-solve, cascade, tie-analyze, tail, conjecture,
// repro-example. Exit codes: 0 success, 1 usage, 2 validation, 3 numerical
// failure, 4 reference-diff failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cascadia/cascade.hpp"
#include "cascadia/dcopf.hpp"
#include "cascadia/errors.hpp"
#include "cascadia/generate.hpp"
#include "cascadia/graph.hpp"
#include "cascadia/parallel.hpp"
#include "cascadia/ptdf.hpp"
#include "cascadia/reference_instance.hpp"
#include "cascadia/scenarios.hpp"
#include "cascadia/ties.hpp"

namespace {

using nlohmann::json;
using namespace cascadia;

constexpr const char* kArtifactVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitDiff = 4;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write file: " + path.string());
  out << text;
}

std::string fmt17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::string cleaned = text;
  for (auto& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(cleaned);
  double value;
  while (in >> value) out.push_back(value);
  if (out.empty()) throw UsageError("expected a list of numbers, got: " + text);
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<int>(i)) = values[i];
  return v;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_numbers(text)) out.push_back(static_cast<int>(v));
  return out;
}

// "@path" reads one vector per line; anything else parses inline.
std::vector<Eigen::VectorXd> parse_demands(const std::string& value) {
  std::vector<Eigen::VectorXd> out;
  if (!value.empty() && value[0] == '@') {
    std::istringstream in(read_file(value.substr(1)));
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.push_back(to_vector(parse_numbers(line)));
    }
    if (out.empty()) throw UsageError("demand file has no vectors: " + value.substr(1));
  } else {
    out.push_back(to_vector(parse_numbers(value)));
  }
  return out;
}

Graph load_graph(const std::string& path) {
  const Graph g = graph_from_json(read_file(path));
  if (!is_connected(g, full_mask(g)))
    throw MalformedGraph("input graph must be connected");
  return g;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

json trace_json(const CascadeTrace& trace, int first_edge, bool with_states) {
  json steps = json::array();
  for (const auto& step : trace.steps) {
    json s;
    s["failed"] = step.failed_edges;
    json thetas = json::array();
    for (const auto& [component, theta] : step.thetas)
      thetas.push_back({{"component", component}, {"theta", theta}});
    s["theta_per_component"] = thetas;
    if (with_states && step.post_state.demand.size() > 0) {
      s["demand"] = vector_json(step.post_state.demand);
      s["generation"] = vector_json(step.post_state.generation);
      s["flow"] = vector_json(step.post_state.flow);
    }
    steps.push_back(std::move(s));
  }
  json out;
  out["first_edge"] = first_edge;
  out["steps"] = std::move(steps);
  out["end_demand"] = vector_json(trace.end_demand);
  out["end_components"] = trace.end_components.assignment;
  out["failure_size"] = trace.failure_size;
  out["disconnected_from_max"] = trace.disconnected_from_max;
  return out;
}

void dump_ptdf_csv(const PtdfSystem& p, const std::string& path) {
  std::ostringstream out;
  for (int e = 0; e < p.edge_count(); ++e) {
    for (int i = 0; i < p.node_count(); ++i) out << (i ? "," : "") << fmt17(p.v(e, i));
    out << "\n";
  }
  write_file(path, out.str());
}

// JSON config file (or a manifest with a config_echo block). Values become
// defaults; explicit flags still win. Unknown keys are rejected.
void apply_config_file(const std::string& path, CLI::App* cmd) {
  json parsed;
  try {
    parsed = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw UsageError(std::string("invalid config JSON: ") + ex.what());
  }
  if (parsed.contains("config_echo")) parsed = parsed["config_echo"];
  if (!parsed.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : parsed.items()) {
    CLI::Option* option = cmd->get_option_no_throw("--" + key);
    if (option == nullptr) throw UsageError("unknown config key: " + key);
    if (option->count() > 0) continue;  // command-line flag wins
    const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    option->add_result(text);
  }
}

struct Timings {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    std::uint64_t seed, const json& config_echo, double total_seconds) {
  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["command"] = command;
  manifest["seed"] = seed;
  manifest["config_echo"] = config_echo;
  manifest["timings"] = {{"total_seconds", total_seconds}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct OpfArgs {
  std::string graph_path;
  std::string demand;
  double lambda = 0.5;
  std::string dump_ptdf;
};

int run_opf(const OpfArgs& args) {
  const Graph g = load_graph(args.graph_path);
  const Eigen::VectorXd d = to_vector(parse_numbers(args.demand));
  if (d.size() != g.node_count) throw UsageError("demand length must match the node count");

  const PtdfSystem base = compute_ptdf(g);
  const Graph oriented =
      orient_for_demand(g, {base.v * d, Eigen::VectorXd::Zero(g.edge_count())});
  const PtdfSystem p = compute_ptdf(oriented);
  if (!args.dump_ptdf.empty()) dump_ptdf_csv(p, args.dump_ptdf);

  const OpfSolution sol = solve(make_opf_problem(p, d, args.lambda));
  json out;
  out["generation"] = vector_json(sol.generation);
  out["objective"] = 0.5 * sol.generation.squaredNorm();
  out["active_set"] = sol.active_set;
  out["multipliers"] = {
      {"mu", vector_json(sol.mu)}, {"nu", vector_json(sol.nu)}, {"delta", sol.delta}};
  out["kkt_residual"] = sol.kkt_residual;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

struct CascadeArgs {
  std::string graph_path;
  std::string demand;
  double lambda = 0.5;
  double lambda_star = -1;
  std::string rule = "break_all";
  int first_edge = 0;
  std::string out_path;
  std::string dump_ptdf;
  bool with_states = false;
};

int run_cascade_cmd(const CascadeArgs& args) {
  const Graph g = load_graph(args.graph_path);
  const double lambda_star = args.lambda_star < 0 ? args.lambda : args.lambda_star;
  const TieBreakRule rule = tie_break_rule_from_string(args.rule);

  std::ostringstream lines;
  PtdfCache cache(g);
  const PtdfSystem& base = cache.get(full_mask(g));
  bool dumped = false;
  for (const Eigen::VectorXd& d : parse_demands(args.demand)) {
    if (d.size() != g.node_count) throw UsageError("demand length must match the node count");
    const Graph oriented =
        orient_for_demand(g, {base.v * d, Eigen::VectorXd::Zero(g.edge_count())});
    const PtdfSystem p = compute_ptdf(oriented);
    if (!args.dump_ptdf.empty() && !dumped) {
      dump_ptdf_csv(p, args.dump_ptdf);
      dumped = true;
    }
    const LimitSet limits = planning_stage(p, d, args.lambda, lambda_star);
    const OpfSolution sol = solve(make_opf_problem(p, d, args.lambda));
    const CascadeTrace trace =
        run_cascade(oriented, d, sol.generation, limits, args.first_edge, rule, &cache);
    lines << trace_json(trace, args.first_edge, args.with_states).dump() << "\n";
  }

  if (args.out_path.empty()) {
    std::cout << lines.str();
  } else {
    write_file(args.out_path, lines.str());
  }
  return kExitOk;
}

struct TieArgs {
  std::string graph_path;
  std::string gamma;
  std::string prefix;
  std::string pair;
  double lambda = 0.5;
  double lambda_star = -1;
  double epsilon = 1e-4;
};

int run_tie(const TieArgs& args) {
  const Graph g = load_graph(args.graph_path);
  const Eigen::VectorXd gamma = to_vector(parse_numbers(args.gamma));
  if (gamma.size() != g.node_count) throw UsageError("gamma length must match the node count");
  const std::vector<int> prefix = args.prefix.empty() ? std::vector<int>{} : parse_ints(args.prefix);
  const std::vector<int> pair = parse_ints(args.pair);
  if (pair.size() != 2) throw UsageError("--pair needs exactly two edge ids");
  const double lambda_star = args.lambda_star < 0 ? args.lambda : args.lambda_star;

  const TieAnalysis analysis =
      analyze_tie(g, gamma, args.lambda, lambda_star, args.epsilon, prefix, pair[0], pair[1]);
  json out;
  out["applicable"] = analysis.applicable;
  if (!analysis.applicable) {
    out["reason"] = analysis.reason;
  } else {
    out["q"] = matrix_json(analysis.q);
    out["conditions"] = {{"constant_term", analysis.conditions.constant_term},
                         {"linear_term", analysis.conditions.linear_term},
                         {"quadratic_term", analysis.conditions.quadratic_term},
                         {"residual_constant", analysis.conditions.residual_constant},
                         {"residual_linear", analysis.conditions.residual_linear},
                         {"residual_quadratic", analysis.conditions.residual_quadratic},
                         {"all", analysis.conditions.all()}};
    out["skew_symmetric"] = analysis.skew_symmetric;
    out["same_sign"] = analysis.same_sign;
    out["psi_j"] = analysis.psi_j;
    out["psi_k"] = analysis.psi_k;
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

struct TailArgs {
  std::string graph_path;
  double alpha = 1.5;
  double lambda = 0.5;
  double lambda_star = -1;
  std::string rule = "break_all";
  long replicas = 100000;
  std::uint64_t seed = 1;
  int hill_k = 0;
  long partition_replicas = 0;
  int threads = 0;
  std::string out_dir;
};

json tail_config_echo(const TailArgs& args, double lambda_star) {
  json echo;
  echo["graph"] = args.graph_path;
  echo["alpha"] = args.alpha;
  echo["lambda"] = args.lambda;
  echo["lambda-star"] = lambda_star;
  echo["rule"] = args.rule;
  echo["replicas"] = args.replicas;
  echo["seed"] = args.seed;
  echo["hill-k"] = args.hill_k;
  echo["partition-replicas"] = args.partition_replicas;
  return echo;
}

int run_tail(const TailArgs& args) {
  Timings timings;
  const Graph g = load_graph(args.graph_path);
  const double lambda_star = args.lambda_star < 0 ? args.lambda : args.lambda_star;
  const TieBreakRule rule = tie_break_rule_from_string(args.rule);

  TailOptions options;
  options.replicas = args.replicas;
  options.seed = args.seed;
  options.hill_k = args.hill_k;
  options.partition_replicas = args.partition_replicas;
  options.threads = resolve_thread_count(args.threads);
  const TailEstimate estimate =
      monte_carlo_tail(g, args.alpha, args.lambda, lambda_star, rule, options);

  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);

  std::ostringstream survival;
  survival << "x,p_hat\n";
  for (const auto& [x, p] : estimate.survival_points)
    survival << fmt17(x) << "," << fmt17(p) << "\n";
  write_file(dir / "survival.csv", survival.str());

  std::ostringstream scenarios;
  scenarios << "max_node,first_edge,disconnected,active_set,probability\n";
  for (const auto& [key, prob] : estimate.partition.probability) {
    scenarios << key.max_node << "," << key.first_edge << "," << key.disconnected << ",";
    for (std::size_t i = 0; i < key.active_set.size(); ++i)
      scenarios << (i ? "|" : "") << key.active_set[i];
    scenarios << "," << fmt17(prob) << "\n";
  }
  write_file(dir / "scenarios.csv", scenarios.str());

  json summary;
  summary["graph"] = {{"nodes", g.node_count}, {"edges", g.edge_count()}};
  summary["alpha"] = args.alpha;
  summary["lambda"] = args.lambda;
  summary["lambda_star"] = lambda_star;
  summary["rule"] = args.rule;
  summary["replicas"] = estimate.sample_count;
  summary["seed"] = args.seed;
  summary["hill_k"] = estimate.hill_k;
  summary["hill_alpha"] = estimate.hill_valid ? json(estimate.hill_alpha) : json();
  summary["c_hat_empirical"] = estimate.c_hat_empirical;
  summary["c_theoretical"] = estimate.c_theoretical;
  summary["zero_fraction"] = estimate.zero_fraction;
  summary["solver_failures"] = estimate.solver_failures;
  summary["big_jump_top_fraction"] = estimate.big_jump_top_fraction;
  summary["partition"] = {{"replicas", estimate.partition.replicas},
                          {"cells_observed", estimate.partition.probability.size()},
                          {"nostab_fraction", estimate.partition.nostab_fraction}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  write_manifest(dir, "tail", args.seed, tail_config_echo(args, lambda_star),
                 timings.seconds());
  std::cout << "tail: " << estimate.sample_count << " replicas -> " << args.out_dir << "\n";
  return kExitOk;
}

struct ConjectureArgs {
  int max_nodes = 6;
  int gammas = 20;
  std::string rules = "break_all,smallest_label,largest_label";
  double alpha = 1.5;
  double lambda = 0.5;
  double lambda_star = -1;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir;
};

int run_conjecture(const ConjectureArgs& args) {
  Timings timings;
  const double lambda_star = args.lambda_star < 0 ? args.lambda : args.lambda_star;
  std::vector<TieBreakRule> rules;
  std::istringstream rule_list(args.rules);
  std::string name;
  while (std::getline(rule_list, name, ',')) rules.push_back(tie_break_rule_from_string(name));

  const std::vector<Graph> graphs = all_connected_graphs(args.max_nodes);
  const ConjectureReport report = tie_break_invariance_experiment(
      graphs, args.alpha, args.lambda, lambda_star, rules, args.gammas, args.seed,
      resolve_thread_count(args.threads));

  json out;
  out["graphs"] = report.graphs;
  out["instances"] = report.instances;
  out["stabilized"] = report.stabilized;
  out["agreements"] = report.agreements;
  out["nostab"] = report.nostab;
  out["counterexample_count"] = report.counterexamples.size();
  json cxs = json::array();
  for (const auto& cx : report.counterexamples) {
    json c;
    c["graph"] = json::parse(graph_to_json(cx.graph));
    c["gamma"] = vector_json(cx.gamma);
    c["max_node"] = cx.max_node;
    c["first_edge"] = cx.first_edge;
    json traces;
    for (const auto& [rule_name, trace] : cx.traces)
      traces[rule_name] = trace_json(trace, cx.first_edge, true);
    c["traces"] = std::move(traces);
    cxs.push_back(std::move(c));
  }
  out["counterexamples"] = std::move(cxs);

  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", out.dump(2) + "\n");

  json echo;
  echo["max-nodes"] = args.max_nodes;
  echo["gammas"] = args.gammas;
  echo["rules"] = args.rules;
  echo["alpha"] = args.alpha;
  echo["lambda"] = args.lambda;
  echo["lambda-star"] = lambda_star;
  echo["seed"] = args.seed;
  write_manifest(dir, "conjecture", args.seed, echo, timings.seconds());

  std::cout << "conjecture: " << report.agreements << "/" << report.stabilized
            << " stabilized instances agree across rules ("
            << report.counterexamples.size() << " counterexamples) -> " << args.out_dir
            << "\n";
  return report.counterexamples.empty() ? kExitOk : kExitDiff;
}

struct ReproArgs {
  double lambda = 0.5;
  double lambda_star = 0.55;
  double epsilon = 1e-4;
  std::string regime = "normal";
  bool corrupt = false;
};

int run_repro(const ReproArgs& args) {
  ReproOptions options;
  options.lambda = args.lambda;
  options.lambda_star = args.lambda_star;
  options.epsilon = args.epsilon;
  options.high_emergency = args.regime == "high-emergency";
  options.corrupt_fixture = args.corrupt;
  const ReproReport report = run_reference_checks(options);
  for (const auto& line : report.checks) std::cout << line << "\n";
  if (!report.ok) {
    std::cout << "repro-example: " << report.failures.size() << " check(s) failed\n";
    return kExitDiff;
  }
  std::cout << "repro-example: all checks passed\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascading-failure model on DC power networks: PTDF flow physics, "
               "projection-based dispatch, cascade simulation and heavy-tail "
               "Monte Carlo"};
  app.require_subcommand(1);

  OpfArgs opf;
  CLI::App* opf_cmd = app.add_subcommand("opf-solve", "Solve the quadratic dispatch problem");
  opf_cmd->add_option("--graph", opf.graph_path, "Graph JSON file")->required();
  opf_cmd->add_option("--demand", opf.demand, "Demand vector, e.g. \"1,0,0\"")->required();
  opf_cmd->add_option("--lambda", opf.lambda, "Loading factor in (0,1)");
  opf_cmd->add_option("--dump-ptdf", opf.dump_ptdf, "Write the oriented PTDF matrix as CSV");

  CascadeArgs cascade_args;
  CLI::App* cascade_cmd = app.add_subcommand("cascade", "Run one cascade per demand vector");
  cascade_cmd->add_option("--graph", cascade_args.graph_path, "Graph JSON file")->required();
  cascade_cmd->add_option("--demand", cascade_args.demand,
                          "Demand vector or @file with one vector per line")
      ->required();
  cascade_cmd->add_option("--first-edge", cascade_args.first_edge, "Exogenous first failure")
      ->required();
  cascade_cmd->add_option("--lambda", cascade_args.lambda, "Loading factor in (0,1)");
  cascade_cmd->add_option("--lambda-star", cascade_args.lambda_star,
                          "Emergency factor >= lambda (default: lambda)");
  cascade_cmd->add_option("--rule", cascade_args.rule, "Tie-break rule")
      ->check(CLI::IsMember({"break_all", "smallest_label", "largest_label"}));
  cascade_cmd->add_option("--out", cascade_args.out_path, "Write JSONL here instead of stdout");
  cascade_cmd->add_option("--dump-ptdf", cascade_args.dump_ptdf,
                          "Write the oriented PTDF matrix as CSV");
  cascade_cmd->add_flag("--states", cascade_args.with_states,
                        "Include per-step demand/generation/flow vectors");

  TieArgs tie;
  CLI::App* tie_cmd =
      app.add_subcommand("tie-analyze", "Exact equal-exceedance conditions for an edge pair");
  tie_cmd->add_option("--graph", tie.graph_path, "Graph JSON file")->required();
  tie_cmd->add_option("--gamma", tie.gamma, "Demand ratios, first entry 0")->required();
  tie_cmd->add_option("--prefix", tie.prefix, "Failed edges before the comparison");
  tie_cmd->add_option("--pair", tie.pair, "Two edge ids, e.g. \"5,6\"")->required();
  tie_cmd->add_option("--lambda", tie.lambda, "Loading factor in (0,1)");
  tie_cmd->add_option("--lambda-star", tie.lambda_star, "Emergency factor (default: lambda)");
  tie_cmd->add_option("--epsilon", tie.epsilon, "Working epsilon");

  TailArgs tail;
  CLI::App* tail_cmd =
      app.add_subcommand("tail", "Monte Carlo tail of the total failure size");
  tail_cmd->add_option("--graph", tail.graph_path, "Graph JSON file")->required();
  tail_cmd->add_option("--alpha", tail.alpha, "Pareto tail index of the demands");
  tail_cmd->add_option("--lambda", tail.lambda, "Loading factor in (0,1)");
  tail_cmd->add_option("--lambda-star", tail.lambda_star,
                       "Emergency factor >= lambda (default: lambda)");
  tail_cmd->add_option("--rule", tail.rule, "Tie-break rule")
      ->check(CLI::IsMember({"break_all", "smallest_label", "largest_label"}));
  tail_cmd->add_option("--replicas", tail.replicas, "Monte Carlo replicas");
  tail_cmd->add_option("--seed", tail.seed, "RNG seed");
  tail_cmd->add_option("--hill-k", tail.hill_k, "Hill order statistics (0: 0.5% of replicas)");
  tail_cmd->add_option("--partition-replicas", tail.partition_replicas,
                       "Draws for the scenario partition (0: min(replicas, 20000))");
  tail_cmd->add_option("--threads", tail.threads,
                       "Worker threads (0: CASCADIA_THREADS or hardware)");
  tail_cmd->add_option("--out", tail.out_dir, "Output directory")->required();

  ConjectureArgs conjecture;
  CLI::App* conjecture_cmd = app.add_subcommand(
      "conjecture", "Tie-break invariance sweep over all small connected graphs");
  conjecture_cmd->add_option("--max-nodes", conjecture.max_nodes, "Largest graph size");
  conjecture_cmd->add_option("--gammas", conjecture.gammas, "Demand-ratio draws per graph");
  conjecture_cmd->add_option("--rules", conjecture.rules, "Comma-separated rule list");
  conjecture_cmd->add_option("--alpha", conjecture.alpha, "Pareto tail index");
  conjecture_cmd->add_option("--lambda", conjecture.lambda, "Loading factor in (0,1)");
  conjecture_cmd->add_option("--lambda-star", conjecture.lambda_star,
                             "Emergency factor (default: lambda)");
  conjecture_cmd->add_option("--seed", conjecture.seed, "RNG seed");
  conjecture_cmd->add_option("--threads", conjecture.threads,
                             "Worker threads (0: CASCADIA_THREADS or hardware)");
  conjecture_cmd->add_option("--out", conjecture.out_dir, "Output directory")->required();

  ReproArgs repro;
  CLI::App* repro_cmd = app.add_subcommand(
      "repro-example", "Check the bundled six-node instance against its golden data");
  repro_cmd->add_option("--lambda", repro.lambda, "Loading factor");
  repro_cmd->add_option("--lambda-star", repro.lambda_star, "Emergency factor");
  repro_cmd->add_option("--epsilon", repro.epsilon, "Working epsilon");
  repro_cmd->add_option("--regime", repro.regime, "Expected regime")
      ->check(CLI::IsMember({"normal", "high-emergency"}));
  repro_cmd->add_flag("--corrupt-fixture", repro.corrupt,
                      "Self-test: perturb one golden entry and expect a diff");

  // A JSON config file (or a manifest) supplies defaults; flags override it.
  std::string config_path;
  for (auto* cmd : {opf_cmd, cascade_cmd, tie_cmd, tail_cmd, conjecture_cmd, repro_cmd}) {
    cmd->add_option("--config", config_path,
                    "JSON config file or manifest.json; flags take precedence");
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return kExitUsage;
    }

    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) {
      apply_config_file(config_path, active);
      // Re-resolve bound variables from the injected results.
      for (CLI::Option* option : active->get_options()) {
        if (option->count() > 0) option->run_callback();
      }
    }

    const std::string name = active->get_name();
    if (name == "opf-solve") return run_opf(opf);
    if (name == "cascade") return run_cascade_cmd(cascade_args);
    if (name == "tie-analyze") return run_tie(tie);
    if (name == "tail") return run_tail(tail);
    if (name == "conjecture") return run_conjecture(conjecture);
    if (name == "repro-example") return run_repro(repro);
    return kExitUsage;
  } catch (const UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const CLI::Error& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const NumericalFailure& ex) {
    std::cerr << "numerical failure: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    return kExitValidation;
  }
}
