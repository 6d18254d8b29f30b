// Brute-force reference solver: enumerates every active subset of the
// inequality constraints, solves each equality-constrained stationary system
// directly, and keeps the best feasible candidate with admissible multiplier
// signs. Independent of the production active-set path; quadratic objective
// and linear constraints only.
#pragma once

#include <Eigen/Dense>

#include "lmpsens/problem.hpp"

namespace oracle {

struct Result {
  bool found = false;
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;  // per constraint, zeros off the active set
  double objective = 0.0;
  std::vector<int> active;  // active inequality constraint indices
};

Result brute_force_solve(const lmpsens::Problem& p, double tol = 1e-9);

}  // namespace oracle
