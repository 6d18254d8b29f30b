// Assembly of a Scenario into the day-ahead dispatch optimization problem:
// maximize bid-based welfare subject to tagged linear/quadratic constraints.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsens/scenario.hpp"

namespace lmpsens {

enum class VarKind { UnitPower, Angle };

struct VarInfo {
  VarKind kind;
  int entity;  // unit index (UnitPower) or node index (Angle)
  int hour;    // 1-based
  std::string name;
};

enum class ConstraintType { NodalBalance, UnitLimit, Ramp, FlowLimit, Reference };
enum class Relation { Eq, Le };

struct ConstraintTag {
  ConstraintType type;
  int entity = -1;   // node / unit / line index, by type
  int hour = 0;      // 1-based; for ramps the earlier hour
  int hour2 = 0;     // ramp target hour
  int sub = 0;       // 0 = lower/forward/none, 1 = upper/reverse
  std::string text;  // canonical form, e.g. "balance:n1@1"
};

struct LinTerm {
  int var;
  double coeff;
};

/// Quadratic term contributing coeff * z[v1] * z[v2] to the value
/// (v1 == v2 means coeff * z^2, so the Hessian entry is 2 * coeff).
struct QuadTerm {
  int v1;
  int v2;
  double coeff;
};

struct QuadForm {
  std::vector<LinTerm> lin;
  std::vector<QuadTerm> quad;
  double constant = 0.0;

  double value(const Eigen::VectorXd& z) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& z, int dim) const;
  /// Accumulates scale * Hessian into H (H must be dim x dim).
  void add_hessian(Eigen::MatrixXd& H, double scale) const;
  bool is_linear() const { return quad.empty(); }
};

struct ConstraintRecord {
  ConstraintTag tag;
  Relation relation;
  QuadForm f;              // relation: f == 0 or f <= 0
  std::string owner_firm;  // unit constraints: owning firm id; else empty
  double scale = 1.0;      // max(1, ||lin coeffs||_inf)
};

struct FirmIndexEntry {
  int node;
  int hour;
  int unit;
  int var;
  std::string key;  // "node@hour"
};

struct Problem {
  std::vector<VarInfo> vars;
  QuadForm objective;  // maximized
  std::vector<ConstraintRecord> constraints;

  int hours = 1;
  std::vector<std::string> node_names;
  std::vector<std::string> unit_names;
  std::vector<std::string> unit_firms;
  std::string firm_of_interest;
  std::vector<FirmIndexEntry> firm_index;  // ordered by (node, hour)
  std::vector<std::pair<int, int>> firm_locations;  // all firm (node, hour),
                                                    // kept through reductions
  std::vector<std::pair<int, double>> breakpoint_watch;  // (var, quantity)
  bool has_nonconvex_constraint = false;

  int dim() const { return static_cast<int>(vars.size()); }
  /// Constraint index of NodalBalance(node, hour); -1 if out of range.
  int balance_index(int node, int hour) const;
};

/// Builds the dispatch problem. Throws ScenarioError on bids whose active
/// segment is ambiguous over the unit's quantity box (pin `segment`).
Problem assemble_problem(const Scenario& s);

}  // namespace lmpsens
