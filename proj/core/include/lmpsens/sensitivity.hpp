// Nodal price response matrices by three independent routes, the residual
// value function and its gradient identity, and the market-power markup.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsens/solve.hpp"

namespace lmpsens {

enum class Route { Kkt, Projection, FiniteDifference };

std::string to_string(Route r);

struct ResponseMatrix {
  std::vector<FirmIndexEntry> index;  // row/column order, (node, hour)
  Eigen::MatrixXd m;                  // ($/MWh) / MW
  Route provenance = Route::Kkt;
};

/// A probe changed the subproblem's binding set (or rested on a bid
/// breakpoint): the smooth-neighborhood assumption fails at this point.
class NonsmoothPointError : public std::runtime_error {
 public:
  explicit NonsmoothPointError(const std::string& what)
      : std::runtime_error(what) {}
};

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Bordered Hessian of the reduced system lost invertibility.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double sigma_min)
      : std::runtime_error(what), sigma_min_(sigma_min) {}
  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

struct SensitivityOptions {
  SolveOptions solve;
  double act_tol = 1e-7;
  double mult_tol = 1e-7;
  double fd_step_scale = 1e-5;  // step = scale * max(1, ||x||_inf)
};

/// One factorization of the bordered system serves every column: dv holds
/// the primal sensitivities, dlambda the multiplier sensitivities, both per
/// pinned firm index.
struct BorderedSolve {
  std::vector<int> binding;   // reduced constraint indices, ascending
  Eigen::MatrixXd hessian;    // Lagrangian Hessian over reduced vars
  Eigen::MatrixXd jacobian;   // binding-constraint Jacobian
  Eigen::MatrixXd dv;         // dim x k
  Eigen::MatrixXd dlambda;    // |binding| x k
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

BorderedSolve bordered_solve(const ReducedProblem& rp, const Solution& sol,
                             const SensitivityOptions& opts = {});

ResponseMatrix response_matrix_kkt(const ReducedProblem& rp, const Solution& sol,
                                   const SensitivityOptions& opts = {});

/// Quadratic-form route with the objective/constraint Hessian split; the two
/// terms sum to the matrix identically.
struct ProjectionSplit {
  ResponseMatrix matrix;
  Eigen::MatrixXd objective_term;
  Eigen::MatrixXd constraint_term;
  double split_deviation = 0.0;
};

ProjectionSplit response_matrix_projection(const ReducedProblem& rp,
                                           const Solution& sol,
                                           const SensitivityOptions& opts = {});

ResponseMatrix response_matrix_fd(const Problem& p, const Eigen::VectorXd& x,
                                  const SensitivityOptions& opts = {});

/// Hour-subset variant: only the pinned positions are probed.
ResponseMatrix response_matrix_fd_partial(const Problem& p,
                                          const std::vector<int>& pinned_positions,
                                          const Eigen::VectorXd& x_pinned,
                                          const SensitivityOptions& opts = {});

/// Optimal residual-market utility W(x). Throws InfeasibleError.
double value_function(const Problem& p, const Eigen::VectorXd& x,
                      const SolveOptions& opts = {});

/// Central-difference gradient of W; equals the firm-node LMPs wherever the
/// smooth-neighborhood assumptions hold.
Eigen::VectorXd value_gradient_fd(const Problem& p, const Eigen::VectorXd& x,
                                  const SensitivityOptions& opts = {});

/// Market-power markup -x' M x; nonnegative whenever M is NSD.
double markup(const ResponseMatrix& m, const Eigen::VectorXd& x);

}  // namespace lmpsens
