// Mechanical verification of the sufficient conditions under which the nodal
// price response matrix is symmetric and negative (semi-)definite, for the
// whole firm index set or an hour subset of it.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsens/sensitivity.hpp"
#include "lmpsens/solve.hpp"

namespace lmpsens {

enum class Verdict { Pass, Fail, ProxyVerified };
enum class ConvexityVerdict { Strict, Weak, Fail };
enum class Guarantee { SymmetryND, SymmetryNSD, SymmetryOnly, None };

std::string to_string(Verdict v);
std::string to_string(ConvexityVerdict v);
std::string to_string(Guarantee g);

/// Binding set minus the firm's own unit constraints (the constraint set of
/// the residual subproblem). With keep_firm_rows, firm unit rows stay — the
/// hour-subset variant keeps the free-part constraints in scope.
struct ReducedSet {
  std::vector<int> constraints;  // ascending constraint indices
  int scope_dim = 0;
};

ReducedSet reduced_set(const BindingSet& bs, const Problem& p,
                       bool keep_firm_rows = false);

struct RankReport {
  int count = 0;
  int rank = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool pass = false;
};

RankReport licq(const ReducedSet& rs, const Problem& p, const Solution& sol);

bool cardinality_check(const ReducedSet& rs, const Problem& p);

struct KernelReport {
  int dim = 0;
  Eigen::MatrixXd basis;        // scope_dim x dim
  Eigen::VectorXd eigenvalues;  // of the kernel-restricted Lagrangian Hessian
  double min_abs = 0.0;
  double scale = 1.0;
  bool pass = false;
};

KernelReport kernel_hessian(const ReducedSet& rs, const Problem& p,
                            const Solution& sol);

struct StabilityReport {
  bool pass = false;
  int probes = 0;
  double radius = 0.0;
  std::string detail;
};

struct ConvexityReport {
  ConvexityVerdict verdict = ConvexityVerdict::Fail;
  double objective_max_eig = 0.0;
  std::string detail;
};

ConvexityReport convexity_check(const Problem& p, const ReducedSet& rs);

struct PropOptions {
  SolveOptions solve;
  double act_tol = 1e-7;
  double mult_tol = 1e-7;
  double probe_radius = -1.0;  // <0: 1e-4 * max(1, ||x||_inf)
  int probe_random_trials = 4;
  unsigned probe_seed = 7u;
  bool offer_independence = true;
};

/// Re-solves the subproblem at points on a sphere around x and demands an
/// unchanged binding set.
StabilityReport binding_stability_probe(const Problem& p,
                                        const std::vector<int>& pinned_positions,
                                        const Eigen::VectorXd& x,
                                        const PropOptions& opts);

struct PropositionReport {
  int proposition = 1;
  Verdict uniqueness = Verdict::Fail;   // proxy only, never "proved"
  Verdict smoothness = Verdict::Fail;
  Verdict cardinality = Verdict::Fail;
  Verdict licq_verdict = Verdict::Fail;
  Verdict kernel_verdict = Verdict::Fail;
  Verdict stability = Verdict::Fail;
  ConvexityVerdict convexity = ConvexityVerdict::Fail;
  Guarantee guarantee = Guarantee::None;

  // diagnostics
  int binding_count = 0;
  int scope_dim = 0;
  RankReport rank;
  KernelReport kernel;
  StabilityReport probe;
  ConvexityReport convex;
  std::vector<std::string> degenerate;  // weakly-active binding rows
  bool offer_independence_checked = false;
  double offer_independence_dev = 0.0;
  std::string notes;

  bool structural_pass() const;
};

class PartitionError : public std::runtime_error {
 public:
  explicit PartitionError(const std::string& what) : std::runtime_error(what) {}
};

PropositionReport check_prop1(const Problem& p, const Eigen::VectorXd& x,
                              const PropOptions& opts = {});

/// Hour partition for the generalized statement: `pinned_positions` are the
/// firm_index positions kept as parameters; the complement is optimized.
struct HourPartition {
  std::vector<int> pinned_positions;
};

/// Throws PartitionError when a binding firm constraint couples the pinned
/// and free parts of the split.
PropositionReport check_prop2(const Problem& p, const HourPartition& part,
                              const Eigen::VectorXd& x_pinned,
                              const PropOptions& opts = {});

}  // namespace lmpsens
