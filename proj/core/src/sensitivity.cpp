#include "lmpsens/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace lmpsens {

std::string to_string(Route r) {
  switch (r) {
    case Route::Kkt: return "kkt";
    case Route::Projection: return "projection";
    case Route::FiniteDifference: return "finite-difference";
  }
  return "?";
}

namespace {

void require_smooth_solution(const ReducedProblem& rp, const Solution& sol) {
  if (sol.status != SolveStatus::Optimal)
    throw InfeasibleError("subproblem not solved to optimality (status " +
                          to_string(sol.status) + ")");
  if (!sol.marginal_offers.empty()) {
    std::ostringstream msg;
    msg << "marginal offer: dispatch rests on a bid-curve breakpoint (";
    for (size_t i = 0; i < sol.marginal_offers.size(); ++i)
      msg << (i ? ", " : "")
          << rp.problem.vars[static_cast<size_t>(sol.marginal_offers[i])].name;
    msg << "); the price response is one-sided here";
    throw NonsmoothPointError(msg.str());
  }
}

Eigen::MatrixXd constraint_hessian(const Problem& p, int m) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  p.constraints[static_cast<size_t>(m)].f.add_hessian(H, 1.0);
  return H;
}

}  // namespace

BorderedSolve bordered_solve(const ReducedProblem& rp, const Solution& sol,
                             const SensitivityOptions& opts) {
  require_smooth_solution(rp, sol);
  const Problem& q = rp.problem;
  const int n = q.dim();
  const int k = static_cast<int>(rp.pinned_index.size());

  BorderedSolve bs;
  BindingSet binding = binding_set(q, sol, opts.act_tol, opts.mult_tol);
  bs.binding = binding.indices();
  const int m = static_cast<int>(bs.binding.size());

  bs.jacobian.resize(m, n);
  for (int i = 0; i < m; ++i)
    bs.jacobian.row(i) =
        q.constraints[static_cast<size_t>(bs.binding[static_cast<size_t>(i)])].f.gradient(
            sol.point, n);

  bs.hessian = Eigen::MatrixXd::Zero(n, n);
  q.objective.add_hessian(bs.hessian, 1.0);
  for (int i = 0; i < m; ++i) {
    const int c = bs.binding[static_cast<size_t>(i)];
    q.constraints[static_cast<size_t>(c)].f.add_hessian(bs.hessian,
                                                        -sol.multipliers[c]);
  }

  Eigen::MatrixXd H(n + m, n + m);
  H.setZero();
  H.topLeftCorner(n, n) = bs.hessian;
  H.topRightCorner(n, m) = bs.jacobian.transpose();
  H.bottomLeftCorner(m, n) = bs.jacobian;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  bs.sigma_max = sv.size() ? sv[0] : 0.0;
  bs.sigma_min = sv.size() ? sv[sv.size() - 1] : 0.0;
  if (bs.sigma_min <= 1e-10 * std::max(1.0, bs.sigma_max)) {
    std::ostringstream msg;
    msg << "bordered Hessian of the reduced system is singular (sigma_min = "
        << bs.sigma_min << "); the multiplier map is not differentiable here";
    throw SingularSystemError(msg.str(), bs.sigma_min);
  }

  // Row position of each pinned variable's balance constraint in the
  // binding-ordered Jacobian.
  std::vector<int> row_of(static_cast<size_t>(k), -1);
  for (int j = 0; j < k; ++j) {
    const int target = rp.pinned_balance[static_cast<size_t>(j)];
    for (int i = 0; i < m; ++i)
      if (bs.binding[static_cast<size_t>(i)] == target) row_of[static_cast<size_t>(j)] = i;
    if (row_of[static_cast<size_t>(j)] < 0)
      throw SingularSystemError("pinned balance row missing from binding set",
                                bs.sigma_min);
  }

  // H [dv; w] = [0; -dC/dx_j]; the multiplier sensitivity is -w.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + m, k);
  for (int j = 0; j < k; ++j)
    rhs(n + row_of[static_cast<size_t>(j)], j) =
        -rp.pinned_balance_coeff[static_cast<size_t>(j)];
  Eigen::MatrixXd W = svd.solve(rhs);
  bs.dv = W.topRows(n);
  bs.dlambda = -W.bottomRows(m);
  return bs;
}

ResponseMatrix response_matrix_kkt(const ReducedProblem& rp, const Solution& sol,
                                   const SensitivityOptions& opts) {
  BorderedSolve bs = bordered_solve(rp, sol, opts);
  const int k = static_cast<int>(rp.pinned_index.size());

  ResponseMatrix out;
  out.provenance = Route::Kkt;
  out.index = rp.pinned_index;
  out.m.resize(k, k);
  for (int i = 0; i < k; ++i) {
    const int target = rp.pinned_balance[static_cast<size_t>(i)];
    int row = -1;
    for (int r = 0; r < static_cast<int>(bs.binding.size()); ++r)
      if (bs.binding[static_cast<size_t>(r)] == target) row = r;
    for (int j = 0; j < k; ++j) out.m(i, j) = bs.dlambda(row, j);
  }
  return out;
}

ProjectionSplit response_matrix_projection(const ReducedProblem& rp,
                                           const Solution& sol,
                                           const SensitivityOptions& opts) {
  BorderedSolve bs = bordered_solve(rp, sol, opts);
  const Problem& q = rp.problem;
  const int n = q.dim();

  ProjectionSplit out;
  out.matrix.provenance = Route::Projection;
  out.matrix.index = rp.pinned_index;
  out.matrix.m = bs.dv.transpose() * bs.hessian * bs.dv;

  Eigen::MatrixXd Hobj = Eigen::MatrixXd::Zero(n, n);
  q.objective.add_hessian(Hobj, 1.0);
  out.objective_term = bs.dv.transpose() * Hobj * bs.dv;

  Eigen::MatrixXd Hcon = Eigen::MatrixXd::Zero(n, n);
  for (int c : bs.binding)
    q.constraints[static_cast<size_t>(c)].f.add_hessian(Hcon, -sol.multipliers[c]);
  out.constraint_term = bs.dv.transpose() * Hcon * bs.dv;

  out.split_deviation =
      (out.objective_term + out.constraint_term - out.matrix.m)
          .lpNorm<Eigen::Infinity>();
  return out;
}

namespace {

struct FdProbe {
  Solution solution;
  ReducedProblem reduced;
  Eigen::VectorXd lmps;
  double welfare;
};

FdProbe fd_probe(const Problem& p, const std::vector<int>& positions,
                 const Eigen::VectorXd& x, const SensitivityOptions& opts,
                 const std::string& what) {
  FdProbe pr{{}, reduce_problem_partial(p, positions, x), {}, 0.0};
  pr.solution = solve(pr.reduced.problem, opts.solve);
  if (pr.solution.status != SolveStatus::Optimal)
    throw InfeasibleError("subproblem infeasible at " + what);
  pr.lmps = firm_lmps(pr.reduced, pr.solution);
  pr.welfare = pr.solution.objective;
  return pr;
}

std::vector<int> binding_indices(const Problem& q, const Solution& sol,
                                 const SensitivityOptions& opts) {
  return binding_set(q, sol, opts.act_tol, opts.mult_tol).indices();
}

void require_same_binding(const std::vector<int>& base,
                          const std::vector<int>& probe,
                          const Problem& q, const std::string& what) {
  if (base == probe) return;
  std::ostringstream msg;
  msg << "nonsmooth point: binding set changed at " << what << " (";
  bool first = true;
  for (int c : probe)
    if (std::find(base.begin(), base.end(), c) == base.end()) {
      msg << (first ? "" : ", ") << "+" << q.constraints[static_cast<size_t>(c)].tag.text;
      first = false;
    }
  for (int c : base)
    if (std::find(probe.begin(), probe.end(), c) == probe.end()) {
      msg << (first ? "" : ", ") << "-" << q.constraints[static_cast<size_t>(c)].tag.text;
      first = false;
    }
  msg << ")";
  throw NonsmoothPointError(msg.str());
}

}  // namespace

ResponseMatrix response_matrix_fd_partial(const Problem& p,
                                          const std::vector<int>& positions,
                                          const Eigen::VectorXd& x,
                                          const SensitivityOptions& opts) {
  const int k = static_cast<int>(positions.size());
  const double step =
      opts.fd_step_scale * std::max(1.0, x.lpNorm<Eigen::Infinity>());

  FdProbe base = fd_probe(p, positions, x, opts, "the base point");
  require_smooth_solution(base.reduced, base.solution);
  const auto base_binding = binding_indices(base.reduced.problem, base.solution, opts);

  ResponseMatrix out;
  out.provenance = Route::FiniteDifference;
  out.index = base.reduced.pinned_index;
  out.m.resize(k, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    FdProbe up = fd_probe(p, positions, xp, opts,
                          "x + step*e_" + std::to_string(j + 1));
    FdProbe dn = fd_probe(p, positions, xm, opts,
                          "x - step*e_" + std::to_string(j + 1));
    require_same_binding(base_binding,
                         binding_indices(up.reduced.problem, up.solution, opts),
                         base.reduced.problem, "x + step*e_" + std::to_string(j + 1));
    require_same_binding(base_binding,
                         binding_indices(dn.reduced.problem, dn.solution, opts),
                         base.reduced.problem, "x - step*e_" + std::to_string(j + 1));
    out.m.col(j) = (up.lmps - dn.lmps) / (2.0 * step);
  }
  return out;
}

ResponseMatrix response_matrix_fd(const Problem& p, const Eigen::VectorXd& x,
                                  const SensitivityOptions& opts) {
  std::vector<int> all(p.firm_index.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return response_matrix_fd_partial(p, all, x, opts);
}

double value_function(const Problem& p, const Eigen::VectorXd& x,
                      const SolveOptions& opts) {
  SubproblemResult r = solve_subproblem(p, x, opts);
  if (r.solution.status != SolveStatus::Optimal)
    throw InfeasibleError("subproblem infeasible at the requested injection");
  return r.welfare;
}

Eigen::VectorXd value_gradient_fd(const Problem& p, const Eigen::VectorXd& x,
                                  const SensitivityOptions& opts) {
  std::vector<int> all(p.firm_index.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const int k = static_cast<int>(all.size());
  const double step =
      opts.fd_step_scale * std::max(1.0, x.lpNorm<Eigen::Infinity>());

  FdProbe base = fd_probe(p, all, x, opts, "the base point");
  require_smooth_solution(base.reduced, base.solution);
  const auto base_binding = binding_indices(base.reduced.problem, base.solution, opts);

  Eigen::VectorXd g(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    FdProbe up = fd_probe(p, all, xp, opts, "x + step*e_" + std::to_string(j + 1));
    FdProbe dn = fd_probe(p, all, xm, opts, "x - step*e_" + std::to_string(j + 1));
    require_same_binding(base_binding,
                         binding_indices(up.reduced.problem, up.solution, opts),
                         base.reduced.problem, "x + step*e_" + std::to_string(j + 1));
    require_same_binding(base_binding,
                         binding_indices(dn.reduced.problem, dn.solution, opts),
                         base.reduced.problem, "x - step*e_" + std::to_string(j + 1));
    g[j] = (up.welfare - dn.welfare) / (2.0 * step);
  }
  return g;
}

double markup(const ResponseMatrix& m, const Eigen::VectorXd& x) {
  if (x.size() != m.m.rows())
    throw std::invalid_argument("markup: injection vector length " +
                                std::to_string(x.size()) +
                                " does not match response matrix dimension " +
                                std::to_string(m.m.rows()));
  return -x.dot(m.m * x);
}

}  // namespace lmpsens
