// Matrix property analysis and cross-route consistency reporting.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsens/propositions.hpp"
#include "lmpsens/sensitivity.hpp"

namespace lmpsens {

/// max_ij |M_ij - M_ji|
double symmetry_defect(const Eigen::MatrixXd& m);

/// Spectrum of the symmetrized matrix: eigenvalues sorted descending,
/// orthonormal vectors with the first nonzero component positive.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns
};

EigenPairs eigen_decompose(const Eigen::MatrixXd& m);

enum class DefinitenessClass {
  NegativeDefinite,
  NegativeSemidefinite,
  Indefinite,
  PositiveSemidefinite,
  PositiveDefinite
};

std::string to_string(DefinitenessClass c);

/// Classifies (M + M')/2 with a tolerance band around zero;
/// tol <= 0 selects the default 1e-8 * max(1, ||M||_inf).
DefinitenessClass classify_definiteness(const Eigen::MatrixXd& m,
                                        double tol = 0.0);

struct CrossCheckOptions {
  SensitivityOptions sens;
  PropOptions prop;
  double tol_routes = 1e-9;   // kkt vs projection
  double tol_fd = 1e-4;       // kkt vs finite differences
  double tol_split = 1e-9;    // objective/constraint split identity
  double tol_symmetry = 1e-8;
  double tol_nested = 1e-6;   // full solve vs outer search
  bool evaluate_nested = true;
  int grid_points = 17;
  int grid_refine = 48;
};

struct CrossCheckReport {
  PropositionReport prop1;
  ResponseMatrix kkt;
  ProjectionSplit projection;
  ResponseMatrix fd;
  double dev_kkt_projection = 0.0;
  double dev_kkt_fd = 0.0;
  double symmetry = 0.0;
  EigenPairs spectrum;  // of the symmetrized kkt matrix
  DefinitenessClass dclass = DefinitenessClass::Indefinite;
  bool nested_evaluated = false;
  double full_objective = 0.0;
  double outer_objective = 0.0;
  double nested_gap = 0.0;
  bool pass = false;
  std::vector<std::string> breaches;
};

/// Runs the proposition checker, all three response-matrix routes, spectrum
/// and definiteness analysis, and (for firm index sets of dimension <= 2)
/// the nested-equivalence gap between the full solve and an outer
/// grid-and-refine search over the firm injections.
CrossCheckReport cross_check(const Problem& p, const Eigen::VectorXd& x,
                             const CrossCheckOptions& opts = {});

}  // namespace lmpsens
