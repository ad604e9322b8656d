#include "cascadia/dcopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascadia/errors.hpp"

namespace cascadia {

namespace {

constexpr double kZeroCapacityRel = 1e-13;  // |V d|_e below this (relative) is a zero-capacity edge
constexpr double kRankThreshold = 1e-10;    // dependent-row threshold, relative to largest pivot

struct HyperplaneSplit {
  std::vector<int> lower_rows;  // 0-based edge rows with a lower-bound constraint
  std::vector<int> upper_rows;
};

HyperplaneSplit split_index_set(const std::vector<int>& index_set, int m) {
  HyperplaneSplit split;
  bool has_balance = false;
  for (int idx : index_set) {
    if (idx == 0) {
      has_balance = true;
    } else if (idx >= 1 && idx <= m) {
      split.lower_rows.push_back(idx - 1);
    } else if (idx > m && idx <= 2 * m) {
      split.upper_rows.push_back(idx - m - 1);
    } else {
      throw PreconditionViolated("hyperplane index out of range");
    }
  }
  if (!has_balance) throw PreconditionViolated("index set must contain the balance hyperplane 0");
  return split;
}

// Stacked constraint rows [V_I1; V_I2] with their (1 -/+ lambda) factors.
void stack_rows(const PtdfSystem& p, const HyperplaneSplit& split, double lambda,
                Eigen::MatrixXd& rows, Eigen::VectorXd& factors) {
  const int n = p.node_count();
  const int count = static_cast<int>(split.lower_rows.size() + split.upper_rows.size());
  rows.resize(count, n);
  factors.resize(count);
  int at = 0;
  for (int r : split.lower_rows) {
    rows.row(at) = p.v.row(r);
    factors(at++) = 1.0 - lambda;
  }
  for (int r : split.upper_rows) {
    rows.row(at) = p.v.row(r);
    factors(at++) = 1.0 + lambda;
  }
}

// Keeps a maximal independent subset of rows (rank-revealing QR on the
// transpose). Returned indices are in QR pivot order.
std::vector<int> independent_rows(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return {};
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(kRankThreshold);
  qr.compute(rows.transpose());
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> keep(rank);
  for (int i = 0; i < rank; ++i) keep[i] = static_cast<int>(qr.colsPermutation().indices()(i));
  return keep;
}

// Projection of dbar*e onto the face cut out by the index set, evaluated at
// the demand that defines the right-hand sides. Equals A_I * d.
Eigen::VectorXd project_impl(const PtdfSystem& p, const std::vector<int>& index_set,
                             double lambda, const Eigen::VectorXd& demand) {
  const int n = p.node_count();
  const double dbar = demand.sum() / n;

  HyperplaneSplit split = split_index_set(index_set, p.edge_count());
  Eigen::MatrixXd rows;
  Eigen::VectorXd factors;
  stack_rows(p, split, lambda, rows, factors);
  if (rows.rows() == 0) return Eigen::VectorXd::Constant(n, dbar);

  const std::vector<int> keep = independent_rows(rows);
  Eigen::MatrixXd reduced(keep.size(), n);
  Eigen::VectorXd rhs(keep.size());
  const Eigen::VectorXd planning = rows * demand;  // (V d) per stacked row
  for (std::size_t i = 0; i < keep.size(); ++i) {
    reduced.row(static_cast<int>(i)) = rows.row(keep[i]);
    rhs(static_cast<int>(i)) = factors(keep[i]) * planning(keep[i]);
  }

  const auto gram_ldlt = Eigen::LDLT<Eigen::MatrixXd>(reduced * reduced.transpose());
  Eigen::VectorXd g =
      Eigen::VectorXd::Constant(n, dbar) + reduced.transpose() * gram_ldlt.solve(rhs);
  // One refinement pass; downstream exceedance comparisons on epsilon-scale
  // capacities are sensitive to the absolute error here.
  g += reduced.transpose() * gram_ldlt.solve(rhs - reduced * g);
  return g;
}

struct ActiveConstraint {
  int edge = 0;  // 1-based
  bool upper = false;

  int hyperplane(int m) const { return upper ? m + edge : edge; }
  bool operator==(const ActiveConstraint&) const = default;
};

std::vector<int> to_index_set(const std::vector<ActiveConstraint>& active, int m) {
  std::vector<int> out{0};
  for (const auto& c : active) out.push_back(c.hyperplane(m));
  std::sort(out.begin(), out.end());
  return out;
}

// Least-squares multipliers for g + V^T (nu - mu) + delta e = 0 restricted to
// the active constraints. Column order matches `active`, delta last.
struct MultiplierSolve {
  Eigen::VectorXd values;
  double delta = 0;
};

MultiplierSolve solve_multipliers(const PtdfSystem& p, const std::vector<ActiveConstraint>& active,
                                  const Eigen::VectorXd& g) {
  const int n = p.node_count();
  const int a = static_cast<int>(active.size());
  Eigen::MatrixXd m(n, a + 1);
  for (int i = 0; i < a; ++i) {
    const Eigen::VectorXd row = p.v.row(active[i].edge - 1).transpose();
    m.col(i) = active[i].upper ? row : Eigen::VectorXd(-row);
  }
  m.col(a) = Eigen::VectorXd::Ones(n);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  const Eigen::VectorXd x = cod.solve(-g);
  MultiplierSolve out;
  out.values = x.head(a);
  out.delta = x(a);
  return out;
}

}  // namespace

OpfProblem make_opf_problem(const PtdfSystem& p, const Eigen::VectorXd& demand, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidLoadingFactor("lambda must lie in (0, 1)");
  if (demand.size() != p.node_count())
    throw DimensionMismatch("demand must have one entry per node");
  if (demand.minCoeff() < 0.0) throw PreconditionViolated("demand must be nonnegative");

  OpfProblem problem;
  problem.ptdf = p;
  problem.demand = demand;
  problem.total = demand.sum();
  problem.lambda = lambda;
  if (!(problem.total > 0.0)) throw PreconditionViolated("total demand must be positive");

  Eigen::VectorXd w = p.v * demand;
  const double wmax = w.cwiseAbs().maxCoeff();
  const double ztol = kZeroCapacityRel * std::max(1.0, wmax);
  for (int e = 1; e <= p.edge_count(); ++e) {
    if (!(p.surviving & edge_bit(e))) continue;
    if (w(e - 1) < -ztol)
      throw PreconditionViolated("V d has a negative entry; apply the orientation first");
    if (w(e - 1) < 0.0) w(e - 1) = 0.0;
  }
  problem.lower = (1.0 - lambda) * w;
  problem.upper = (1.0 + lambda) * w;
  return problem;
}

Eigen::VectorXd project_onto_face(const PtdfSystem& p, const std::vector<int>& index_set,
                                  double lambda, const Eigen::VectorXd& demand) {
  return project_impl(p, index_set, lambda, demand);
}

Eigen::MatrixXd projection_matrix(const PtdfSystem& p, const std::vector<int>& index_set,
                                  double lambda) {
  const int n = p.node_count();
  HyperplaneSplit split = split_index_set(index_set, p.edge_count());
  Eigen::MatrixXd rows;
  Eigen::VectorXd factors;
  stack_rows(p, split, lambda, rows, factors);
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  if (rows.rows() == 0) return a;

  const std::vector<int> keep = independent_rows(rows);
  Eigen::MatrixXd reduced(keep.size(), n);
  Eigen::MatrixXd scaled(keep.size(), n);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    reduced.row(static_cast<int>(i)) = rows.row(keep[i]);
    scaled.row(static_cast<int>(i)) = factors(keep[i]) * rows.row(keep[i]);
  }
  const Eigen::MatrixXd gram = reduced * reduced.transpose();
  a += reduced.transpose() * gram.ldlt().solve(scaled);
  return a;
}

Eigen::VectorXd closed_form_generation(const Eigen::VectorXd& demand, double lambda,
                                       const Eigen::MatrixXd& incidence) {
  if (incidence.cols() != demand.size())
    throw DimensionMismatch("incidence and demand sizes disagree");
  const Eigen::VectorXd cd = incidence * demand;
  const double tol = 1e-12 * std::max(1.0, demand.cwiseAbs().maxCoeff());
  for (int e = 0; e < cd.size(); ++e) {
    if (cd(e) < -tol)
      throw PreconditionViolated("C d has a negative entry at edge " + std::to_string(e + 1));
  }
  const double dbar = demand.mean();
  return (1.0 - lambda) * demand + Eigen::VectorXd::Constant(demand.size(), lambda * dbar);
}

std::vector<int> active_index_set(const OpfProblem& p, const Eigen::VectorXd& g, double tol) {
  const int m = p.ptdf.edge_count();
  const Eigen::VectorXd vg = p.ptdf.v * g;
  std::vector<int> out{0};
  for (int e = 1; e <= m; ++e) {
    if (!(p.ptdf.surviving & edge_bit(e))) continue;
    const double lo = p.lower(e - 1);
    const double up = p.upper(e - 1);
    const bool lower_tight = std::abs(vg(e - 1) - lo) <= tol * std::max(1.0, std::abs(lo));
    const bool upper_tight = std::abs(vg(e - 1) - up) <= tol * std::max(1.0, std::abs(up));
    if (lower_tight) out.push_back(e);
    // Both bounds tight means a zero-capacity edge; report it once.
    if (upper_tight && !lower_tight) out.push_back(m + e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

OpfSolution solve(const OpfProblem& problem) {
  const PtdfSystem& p = problem.ptdf;
  const int m = p.edge_count();

  // Scale invariance: work at unit peak demand so every tolerance is honest.
  const double scale = problem.demand.cwiseAbs().maxCoeff();
  const Eigen::VectorXd d = problem.demand / scale;
  const Eigen::VectorXd w = p.v * d;
  const Eigen::VectorXd lower = problem.lower / scale;
  const Eigen::VectorXd upper = problem.upper / scale;
  const double ztol = kZeroCapacityRel * std::max(1.0, w.cwiseAbs().maxCoeff());

  std::vector<int> inequality_edges;  // positive capacity, both bounds free
  std::vector<ActiveConstraint> pinned;  // zero-capacity edges: hard equalities
  for (int e = 1; e <= m; ++e) {
    if (!(p.surviving & edge_bit(e))) continue;
    if (std::abs(w(e - 1)) <= ztol) {
      pinned.push_back({e, false});
    } else {
      inequality_edges.push_back(e);
    }
  }

  Eigen::VectorXd g = d;  // interior feasible point
  std::vector<ActiveConstraint> working;
  const int max_pivots = 10 * (2 * m + 1);
  const double step_tol = 1e-12;
  const double mult_tol = 1e-10;

  auto in_working = [&](int edge, bool upr) {
    return std::any_of(working.begin(), working.end(), [&](const ActiveConstraint& c) {
      return c.edge == edge && c.upper == upr;
    });
  };

  bool converged = false;
  for (int pivot = 0; pivot < max_pivots && !converged; ++pivot) {
    std::vector<ActiveConstraint> active = pinned;
    active.insert(active.end(), working.begin(), working.end());
    const Eigen::VectorXd target = project_impl(p, to_index_set(active, m), problem.lambda, d);
    const Eigen::VectorXd step = target - g;

    if (step.cwiseAbs().maxCoeff() <= step_tol * std::max(1.0, target.cwiseAbs().maxCoeff())) {
      g = target;
      const MultiplierSolve mult = solve_multipliers(p, active, g);
      // Zero-capacity equalities are sign-free; only working-set inequality
      // multipliers may force a drop.
      int worst = -1;
      double worst_value = -mult_tol;
      for (std::size_t i = pinned.size(); i < active.size(); ++i) {
        if (mult.values(static_cast<int>(i)) < worst_value) {
          worst_value = mult.values(static_cast<int>(i));
          worst = static_cast<int>(i);
        }
      }
      if (worst < 0) {
        converged = true;
        break;
      }
      working.erase(std::find(working.begin(), working.end(), active[worst]));
      continue;
    }

    // Ratio test against the inactive bounds.
    const Eigen::VectorXd vstep = p.v * step;
    const Eigen::VectorXd vg = p.v * g;
    const double slope_tol = 1e-12 * std::max(1.0, vstep.cwiseAbs().maxCoeff());
    double alpha = 1.0;
    ActiveConstraint blocking;
    bool blocked = false;
    for (int e : inequality_edges) {
      const double slope = vstep(e - 1);
      if (slope < -slope_tol && !in_working(e, false)) {
        const double room = (lower(e - 1) - vg(e - 1)) / slope;
        const double a = std::max(0.0, room);
        if (a < alpha) {
          alpha = a;
          blocking = {e, false};
          blocked = true;
        }
      } else if (slope > slope_tol && !in_working(e, true)) {
        const double room = (upper(e - 1) - vg(e - 1)) / slope;
        const double a = std::max(0.0, room);
        if (a < alpha) {
          alpha = a;
          blocking = {e, true};
          blocked = true;
        }
      }
    }
    g += alpha * step;
    if (blocked) working.push_back(blocking);
  }
  if (!converged) throw NumericalFailure("active-set pivot budget exhausted");

  if (g.minCoeff() < -1e-9)
    throw NumericalFailure("optimal generation has a negative entry beyond tolerance");

  // Multipliers on the final active set, split so both vectors stay >= 0.
  std::vector<ActiveConstraint> active = pinned;
  active.insert(active.end(), working.begin(), working.end());
  const MultiplierSolve mult = solve_multipliers(p, active, g);

  OpfSolution sol;
  sol.generation = scale * g;
  sol.mu = Eigen::VectorXd::Zero(m);
  sol.nu = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double value = scale * mult.values(static_cast<int>(i));
    const int e = active[i].edge - 1;
    const bool is_equality = i < pinned.size();
    if (active[i].upper) {
      sol.nu(e) += std::max(0.0, value);
    } else if (is_equality && value < 0.0) {
      sol.nu(e) += -value;  // zero-capacity equality pushing the other way
    } else {
      sol.mu(e) += std::max(0.0, value);
    }
  }
  sol.delta = scale * mult.delta;

  sol.active_set = active_index_set(problem, sol.generation);
  sol.kkt_residual = verify_kkt(problem, sol).max_violation;
  return sol;
}

KktReport verify_kkt(const OpfProblem& problem, const OpfSolution& s) {
  const PtdfSystem& p = problem.ptdf;
  const double scale = std::max(1.0, problem.demand.cwiseAbs().maxCoeff());

  const Eigen::VectorXd d = problem.demand / scale;
  const Eigen::VectorXd g = s.generation / scale;
  const Eigen::VectorXd mu = s.mu / scale;
  const Eigen::VectorXd nu = s.nu / scale;
  const double delta = s.delta / scale;
  const Eigen::VectorXd lower = problem.lower / scale;
  const Eigen::VectorXd upper = problem.upper / scale;
  const Eigen::VectorXd vg = p.v * g;

  KktReport report;
  report.stationarity =
      (g + p.v.transpose() * (nu - mu) + Eigen::VectorXd::Constant(g.size(), delta))
          .cwiseAbs()
          .maxCoeff();
  report.dual_feasibility = std::max(0.0, std::max(-mu.minCoeff(), -nu.minCoeff()));
  for (int e = 1; e <= p.edge_count(); ++e) {
    if (!(p.surviving & edge_bit(e))) continue;
    const double lo_gap = lower(e - 1) - vg(e - 1);
    const double up_gap = upper(e - 1) - vg(e - 1);
    report.complementarity =
        std::max({report.complementarity, std::abs(mu(e - 1) * lo_gap), std::abs(nu(e - 1) * up_gap)});
    report.primal_feasibility = std::max({report.primal_feasibility, lo_gap, -up_gap});
  }
  report.primal_feasibility = std::max(0.0, report.primal_feasibility);
  report.balance = std::abs(g.sum() - d.sum());
  report.max_violation =
      std::max({report.stationarity, report.dual_feasibility, report.complementarity,
                report.primal_feasibility, report.balance});
  report.accepted = report.max_violation <= 1e-7;
  return report;
}

OpfSolution face_enumeration_oracle(const OpfProblem& problem) {
  const PtdfSystem& p = problem.ptdf;
  const int n = p.node_count();
  const int m = p.edge_count();

  const double scale = problem.demand.cwiseAbs().maxCoeff();
  const Eigen::VectorXd d = problem.demand / scale;
  const Eigen::VectorXd w = p.v * d;
  const double ztol = kZeroCapacityRel * std::max(1.0, w.cwiseAbs().maxCoeff());
  const Eigen::VectorXd lower = problem.lower / scale;
  const Eigen::VectorXd upper = problem.upper / scale;

  std::vector<int> free_planes;  // hyperplane ids of positive-capacity bounds
  std::vector<int> pinned;       // zero-capacity equalities, always active
  for (int e = 1; e <= m; ++e) {
    if (!(p.surviving & edge_bit(e))) continue;
    if (std::abs(w(e - 1)) <= ztol) {
      pinned.push_back(e);
    } else {
      free_planes.push_back(e);
      free_planes.push_back(m + e);
    }
  }
  if (static_cast<int>(free_planes.size()) + 1 > 23)
    throw BudgetExceeded("face enumeration supports at most 23 hyperplanes");

  const double dbar = d.sum() / n;
  const double feas_tol = 1e-9 * std::max(1.0, w.cwiseAbs().maxCoeff());

  Eigen::VectorXd best;
  double best_objective = std::numeric_limits<double>::infinity();
  const std::uint64_t subsets = std::uint64_t{1} << free_planes.size();
  std::vector<int> index_set;
  for (std::uint64_t bits = 0; bits < subsets; ++bits) {
    index_set.assign({0});
    index_set.insert(index_set.end(), pinned.begin(), pinned.end());
    for (std::size_t i = 0; i < free_planes.size(); ++i) {
      if (bits & (std::uint64_t{1} << i)) index_set.push_back(free_planes[i]);
    }
    const Eigen::VectorXd candidate = project_impl(p, index_set, problem.lambda, d);

    bool feasible = std::abs(candidate.sum() - d.sum()) <= 1e-9 * std::max(1.0, d.sum());
    if (feasible) {
      const Eigen::VectorXd vc = p.v * candidate;
      for (int e = 1; e <= m && feasible; ++e) {
        if (!(p.surviving & edge_bit(e))) continue;
        feasible = vc(e - 1) >= lower(e - 1) - feas_tol && vc(e - 1) <= upper(e - 1) + feas_tol;
      }
    }
    if (!feasible) continue;
    const double objective = (candidate - Eigen::VectorXd::Constant(n, dbar)).squaredNorm();
    if (objective < best_objective - 1e-15) {
      best_objective = objective;
      best = candidate;
    }
  }
  if (best.size() == 0) throw NumericalFailure("face enumeration found no feasible candidate");

  OpfSolution sol;
  sol.generation = scale * best;
  sol.active_set = active_index_set(problem, sol.generation);

  // Least-squares multipliers over the geometric active set.
  std::vector<ActiveConstraint> active;
  for (int idx : sol.active_set) {
    if (idx == 0) continue;
    active.push_back(idx <= m ? ActiveConstraint{idx, false} : ActiveConstraint{idx - m, true});
  }
  const MultiplierSolve mult = solve_multipliers(p, active, best);
  sol.mu = Eigen::VectorXd::Zero(m);
  sol.nu = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double value = scale * mult.values(static_cast<int>(i));
    const int e = active[i].edge - 1;
    if (active[i].upper) {
      sol.nu(e) += std::max(0.0, value);
    } else if (value < 0.0 && std::abs(w(e)) <= ztol) {
      sol.nu(e) += -value;
    } else {
      sol.mu(e) += std::max(0.0, value);
    }
  }
  sol.delta = scale * mult.delta;
  sol.kkt_residual = verify_kkt(problem, sol).max_violation;
  return sol;
}

}  // namespace cascadia
