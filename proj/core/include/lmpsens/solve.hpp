// Active-set Newton-KKT solver for the dispatch problem and its firm
// subproblem; multipliers, binding sets, and LMP extraction.
#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsens/problem.hpp"

namespace lmpsens {

struct SolveOptions {
  double tol = 1e-8;       // KKT certification tolerance
  double act_tol = 1e-7;   // activation tolerance (after per-constraint scaling)
  double mult_tol = 1e-7;  // |multiplier| below this marks a weakly-active row
  int max_iterations = 400;
  int max_newton = 60;
  std::vector<int> initial_active;  // optional starting active set
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

std::string to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::MaxIterations;
  Eigen::VectorXd point;
  Eigen::VectorXd multipliers;  // one per constraint; zero when inactive
  double objective = 0.0;
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  bool local_only = false;           // nonconvex constraints present
  std::vector<int> active;           // final active set, ascending
  std::vector<int> marginal_offers;  // vars resting on a pinned-segment breakpoint
};

struct Residuals {
  double stationarity;
  double feasibility;
  double complementarity;
};

/// Maximizes the problem objective. Deterministic for fixed options.
Solution solve(const Problem& p, const SolveOptions& opts = {});

/// Exact residuals of the first-order system at (point, multipliers).
Residuals kkt_residual(const Problem& p, const Eigen::VectorXd& point,
                       const Eigen::VectorXd& multipliers);

enum class PartitionLabel {
  FirmUnit,      // C_x
  OtherUnit,     // C_y
  FirmBalance,   // C_xu
  OtherBalance,  // C_yu
  Network        // C_u
};

std::string to_string(PartitionLabel l);

struct BindingEntry {
  int constraint;
  PartitionLabel label;
  bool degenerate;  // active inequality with |multiplier| <= mult_tol
};

struct BindingSet {
  std::vector<BindingEntry> entries;  // ascending by constraint index

  bool contains(int constraint) const;
  std::vector<int> indices() const;
};

BindingSet binding_set(const Problem& p, const Solution& sol,
                       double act_tol = 1e-7, double mult_tol = 1e-7);

/// Nodal prices: multiplier of NodalBalance(node, hour), oriented so a
/// costless injection at (node, hour) has marginal value lmp(node, hour).
std::map<std::pair<int, int>, double> lmp_table(const Problem& p,
                                                const Solution& sol);

/// The dispatch problem with a subset of the firm's variables pinned to given
/// values and the firm's own constraints on fully pinned variables dropped.
struct ReducedProblem {
  Problem problem;
  std::vector<int> kept_vars;         // reduced var -> original var
  std::vector<int> kept_constraints;  // reduced constraint -> original index
  std::vector<int> pinned_positions;  // positions into original firm_index
  Eigen::VectorXd pinned_values;
  std::vector<FirmIndexEntry> pinned_index;   // (node, hour) of pinned vars
  std::vector<int> pinned_balance;            // reduced balance row per pinned var
  std::vector<double> pinned_balance_coeff;   // dC/dx at that row (+-1)
  std::vector<int> coupling;  // reduced indices of firm constraints that span
                              // pinned and kept variables (hour-subset splits)
};

/// Pins all firm-of-interest variables at x (the residual-market subproblem).
ReducedProblem reduce_problem(const Problem& p, const Eigen::VectorXd& x);

/// Pins only firm_index positions in `pinned_positions` (hour-subset variant);
/// the remaining firm variables stay decision variables with their offer cost
/// and unit constraints kept.
ReducedProblem reduce_problem_partial(const Problem& p,
                                      const std::vector<int>& pinned_positions,
                                      const Eigen::VectorXd& x_pinned);

struct SubproblemResult {
  ReducedProblem reduced;
  Solution solution;
  double welfare = 0.0;  // optimal residual-market utility
};

SubproblemResult solve_subproblem(const Problem& p, const Eigen::VectorXd& x,
                                  const SolveOptions& opts = {});

/// LMPs of a reduced-problem solution keyed by the pinned firm index order.
Eigen::VectorXd firm_lmps(const ReducedProblem& rp, const Solution& sol);

}  // namespace lmpsens
