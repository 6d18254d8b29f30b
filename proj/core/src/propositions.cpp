#include "lmpsens/propositions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace lmpsens {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::ProxyVerified: return "proxy-verified";
  }
  return "?";
}

std::string to_string(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::Strict: return "strict";
    case ConvexityVerdict::Weak: return "weak";
    case ConvexityVerdict::Fail: return "fail";
  }
  return "?";
}

std::string to_string(Guarantee g) {
  switch (g) {
    case Guarantee::SymmetryND: return "symmetry+ND";
    case Guarantee::SymmetryNSD: return "symmetry+NSD";
    case Guarantee::SymmetryOnly: return "symmetry-only";
    case Guarantee::None: return "none";
  }
  return "?";
}

bool PropositionReport::structural_pass() const {
  return smoothness == Verdict::Pass && cardinality == Verdict::Pass &&
         licq_verdict == Verdict::Pass && kernel_verdict == Verdict::Pass &&
         stability == Verdict::Pass && degenerate.empty();
}

ReducedSet reduced_set(const BindingSet& bs, const Problem& p,
                       bool keep_firm_rows) {
  ReducedSet rs;
  rs.scope_dim = p.dim();
  for (const auto& e : bs.entries) {
    if (!keep_firm_rows && e.label == PartitionLabel::FirmUnit) continue;
    rs.constraints.push_back(e.constraint);
  }
  return rs;
}

namespace {

constexpr double kRankRatio = 1e-8;  // sigma >= ratio * sigma_max counts

Eigen::MatrixXd reduced_jacobian(const ReducedSet& rs, const Problem& p,
                                 const Solution& sol) {
  Eigen::MatrixXd A(static_cast<int>(rs.constraints.size()), p.dim());
  for (size_t i = 0; i < rs.constraints.size(); ++i)
    A.row(static_cast<int>(i)) =
        p.constraints[static_cast<size_t>(rs.constraints[i])].f.gradient(sol.point,
                                                                         p.dim());
  return A;
}

}  // namespace

RankReport licq(const ReducedSet& rs, const Problem& p, const Solution& sol) {
  RankReport r;
  r.count = static_cast<int>(rs.constraints.size());
  if (r.count == 0) {
    r.rank = 0;
    r.pass = true;
    return r;
  }
  Eigen::MatrixXd A = reduced_jacobian(rs, p, sol);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  r.sigma_max = sv.size() ? sv[0] : 0.0;
  r.sigma_min = sv.size() ? sv[sv.size() - 1] : 0.0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] >= kRankRatio * std::max(r.sigma_max, 1e-300)) ++r.rank;
  r.pass = (r.rank == r.count);
  return r;
}

bool cardinality_check(const ReducedSet& rs, const Problem& p) {
  return static_cast<int>(rs.constraints.size()) <= p.dim();
}

KernelReport kernel_hessian(const ReducedSet& rs, const Problem& p,
                            const Solution& sol) {
  KernelReport k;
  const int n = p.dim();
  Eigen::MatrixXd A = reduced_jacobian(rs, p, sol);
  int rank = 0;
  Eigen::MatrixXd V;
  if (A.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] >= kRankRatio * std::max(smax, 1e-300)) ++rank;
    V = svd.matrixV();
  } else {
    V = Eigen::MatrixXd::Identity(n, n);
  }
  k.dim = n - rank;
  if (k.dim == 0) {
    k.pass = true;  // trivial kernel: vacuous
    k.scale = 1.0;
    return k;
  }
  k.basis = V.rightCols(k.dim);

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  p.objective.add_hessian(H, 1.0);
  for (int c : rs.constraints)
    p.constraints[static_cast<size_t>(c)].f.add_hessian(H, -sol.multipliers[c]);
  k.scale = std::max(1.0, H.lpNorm<Eigen::Infinity>());

  Eigen::MatrixXd R = k.basis.transpose() * H * k.basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (R + R.transpose()));
  k.eigenvalues = es.eigenvalues();
  k.min_abs = k.eigenvalues.size()
                  ? k.eigenvalues.cwiseAbs().minCoeff()
                  : 0.0;
  k.pass = k.min_abs >= 1e-8 * k.scale;
  return k;
}

ConvexityReport convexity_check(const Problem& p, const ReducedSet& rs) {
  ConvexityReport r;
  const int n = p.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  p.objective.add_hessian(H, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const double hmax = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  const double hscale = std::max(1.0, H.lpNorm<Eigen::Infinity>());
  r.objective_max_eig = hmax;

  bool constraints_convex = true;
  std::ostringstream detail;
  for (int c : rs.constraints) {
    const auto& rec = p.constraints[static_cast<size_t>(c)];
    if (rec.f.is_linear()) continue;
    if (rec.relation == Relation::Eq) {
      constraints_convex = false;
      detail << "equality '" << rec.tag.text << "' is quadratic; ";
      continue;
    }
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    rec.f.add_hessian(Q, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(Q);
    if (eq.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, Q.lpNorm<Eigen::Infinity>())) {
      constraints_convex = false;
      detail << "inequality '" << rec.tag.text << "' has negative curvature; ";
    }
  }

  if (hmax > 1e-10 * hscale || !constraints_convex) {
    r.verdict = ConvexityVerdict::Fail;
    if (hmax > 1e-10 * hscale) detail << "objective is not concave; ";
  } else if (hmax <= -1e-10 * hscale) {
    r.verdict = ConvexityVerdict::Strict;
  } else {
    r.verdict = ConvexityVerdict::Weak;
  }
  r.detail = detail.str();
  return r;
}

StabilityReport binding_stability_probe(const Problem& p,
                                        const std::vector<int>& positions,
                                        const Eigen::VectorXd& x,
                                        const PropOptions& opts) {
  StabilityReport r;
  const int k = static_cast<int>(positions.size());
  r.radius = opts.probe_radius >= 0.0
                 ? opts.probe_radius
                 : 1e-4 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  if (r.radius == 0.0 || k == 0) {
    r.pass = true;
    r.detail = "radius 0: trivially stable";
    return r;
  }

  ReducedProblem rp0 = reduce_problem_partial(p, positions, x);
  Solution s0 = solve(rp0.problem, opts.solve);
  if (s0.status != SolveStatus::Optimal) {
    r.detail = "base point not solvable";
    return r;
  }
  const auto base = binding_set(rp0.problem, s0, opts.act_tol, opts.mult_tol).indices();

  std::vector<Eigen::VectorXd> dirs;
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    e[j] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  std::mt19937 rng(opts.probe_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < opts.probe_random_trials; ++t) {
    Eigen::VectorXd d(k);
    for (int j = 0; j < k; ++j) d[j] = gauss(rng);
    const double nrm = d.norm();
    if (nrm < 1e-12) continue;
    dirs.push_back(d / nrm);
  }

  for (const auto& d : dirs) {
    ++r.probes;
    Eigen::VectorXd xp = x + r.radius * d;
    ReducedProblem rp = reduce_problem_partial(p, positions, xp);
    Solution s = solve(rp.problem, opts.solve);
    if (s.status != SolveStatus::Optimal) {
      std::ostringstream msg;
      msg << "probe " << r.probes << " infeasible at radius " << r.radius;
      r.detail = msg.str();
      return r;
    }
    const auto probe = binding_set(rp.problem, s, opts.act_tol, opts.mult_tol).indices();
    if (probe != base) {
      std::ostringstream msg;
      msg << "binding set changed at probe " << r.probes << " (radius "
          << r.radius << "):";
      for (int c : probe)
        if (std::find(base.begin(), base.end(), c) == base.end())
          msg << " +" << rp.problem.constraints[static_cast<size_t>(c)].tag.text;
      for (int c : base)
        if (std::find(probe.begin(), probe.end(), c) == probe.end())
          msg << " -" << rp.problem.constraints[static_cast<size_t>(c)].tag.text;
      r.detail = msg.str();
      return r;
    }
  }
  r.pass = true;
  r.detail = "binding set stable at all probes";
  return r;
}

namespace {

// Offer-independence: two distinct firm offers that reproduce the same pinned
// dispatch must leave the firm-node prices unchanged.
double offer_independence_dev(const Problem& p, const std::vector<int>& positions,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& base_lmps,
                              const PropOptions& opts, bool* checked) {
  *checked = false;

  // Bounds of the pinned firm variables in the original problem.
  std::vector<double> lo(positions.size(), -1e300), hi(positions.size(), 1e300);
  for (size_t j = 0; j < positions.size(); ++j) {
    const int var = p.firm_index[static_cast<size_t>(positions[j])].var;
    for (const auto& c : p.constraints) {
      if (c.tag.type != ConstraintType::UnitLimit || c.f.lin.size() != 1 ||
          c.f.lin[0].var != var)
        continue;
      const double a = c.f.lin[0].coeff;
      const double b = -c.f.constant / a;
      if (c.relation == Relation::Eq)
        lo[j] = hi[j] = b;
      else if (a > 0)
        hi[j] = std::min(hi[j], b);
      else
        lo[j] = std::max(lo[j], b);
    }
  }

  auto firm_lmps_of = [&](const Problem& variant) -> Eigen::VectorXd {
    Solution s = solve(variant, opts.solve);
    if (s.status != SolveStatus::Optimal)
      return Eigen::VectorXd::Constant(x.size(), std::nan(""));
    Eigen::VectorXd lmps(x.size());
    for (size_t j = 0; j < positions.size(); ++j) {
      const auto& fe = p.firm_index[static_cast<size_t>(positions[j])];
      lmps[static_cast<int>(j)] = s.multipliers[variant.balance_index(fe.node, fe.hour)];
    }
    return lmps;
  };

  // Variant A: inelastic offer — pin the firm variables with equalities.
  Problem va = p;
  {
    std::vector<ConstraintRecord> kept;
    for (const auto& c : va.constraints) {
      bool drop = false;
      if ((c.tag.type == ConstraintType::UnitLimit ||
           c.tag.type == ConstraintType::Ramp) &&
          c.owner_firm == p.firm_of_interest) {
        for (size_t j = 0; j < positions.size(); ++j) {
          const int var = p.firm_index[static_cast<size_t>(positions[j])].var;
          for (const auto& t : c.f.lin)
            if (t.var == var) drop = true;
        }
      }
      if (!drop) kept.push_back(c);
    }
    va.constraints = std::move(kept);
    for (size_t j = 0; j < positions.size(); ++j) {
      const auto& fe = p.firm_index[static_cast<size_t>(positions[j])];
      ConstraintRecord c;
      c.tag = {ConstraintType::UnitLimit, fe.unit, fe.hour, 0, 0,
               "fix:" + p.unit_names[static_cast<size_t>(fe.unit)] + "@" +
                   std::to_string(fe.hour)};
      c.relation = Relation::Eq;
      c.f.lin.push_back({fe.var, 1.0});
      c.f.constant = -x[static_cast<int>(j)];
      c.owner_firm = p.firm_of_interest;
      va.constraints.push_back(std::move(c));
    }
    // Strip the firm's offer-cost terms on the pinned vars: the offer behind
    // a fixed quantity is irrelevant to the clearing point.
    QuadForm obj;
    obj.constant = va.objective.constant;
    auto pinned_var = [&](int v) {
      for (size_t j = 0; j < positions.size(); ++j)
        if (p.firm_index[static_cast<size_t>(positions[j])].var == v) return true;
      return false;
    };
    for (const auto& t : va.objective.lin)
      if (!pinned_var(t.var)) obj.lin.push_back(t);
    for (const auto& t : va.objective.quad)
      if (!pinned_var(t.v1) && !pinned_var(t.v2)) obj.quad.push_back(t);
    va.objective = std::move(obj);
  }
  Eigen::VectorXd la = firm_lmps_of(va);
  if (la.hasNaN()) return std::numeric_limits<double>::quiet_NaN();
  double dev = (la - base_lmps).lpNorm<Eigen::Infinity>();
  *checked = true;

  // Variant B: a steep elastic offer crossing the base price exactly at x.
  // Only meaningful when x is strictly inside the firm's quantity box.
  bool interior = true;
  for (size_t j = 0; j < positions.size(); ++j)
    if (x[static_cast<int>(j)] <= lo[j] + 1e-6 || x[static_cast<int>(j)] >= hi[j] - 1e-6)
      interior = false;
  if (interior) {
    Problem vb = p;
    constexpr double kappa = 1.0;
    auto pinned_var = [&](int v) {
      for (size_t j = 0; j < positions.size(); ++j)
        if (p.firm_index[static_cast<size_t>(positions[j])].var == v) return true;
      return false;
    };
    QuadForm obj;
    obj.constant = vb.objective.constant;
    for (const auto& t : vb.objective.lin)
      if (!pinned_var(t.var)) obj.lin.push_back(t);
    for (const auto& t : vb.objective.quad)
      if (!pinned_var(t.v1) && !pinned_var(t.v2)) obj.quad.push_back(t);
    for (size_t j = 0; j < positions.size(); ++j) {
      const auto& fe = p.firm_index[static_cast<size_t>(positions[j])];
      const double lam = base_lmps[static_cast<int>(j)];
      const double xj = x[static_cast<int>(j)];
      // offer cost lam*q + kappa/2 (q - x)^2, subtracted from welfare
      obj.lin.push_back({fe.var, -(lam - kappa * xj)});
      obj.quad.push_back({fe.var, fe.var, -0.5 * kappa});
      obj.constant -= 0.5 * kappa * xj * xj;
    }
    vb.objective = std::move(obj);
    Eigen::VectorXd lb = firm_lmps_of(vb);
    if (!lb.hasNaN()) dev = std::max(dev, (lb - base_lmps).lpNorm<Eigen::Infinity>());
  }
  return dev;
}

PropositionReport check_impl(const Problem& p, const std::vector<int>& positions,
                             const Eigen::VectorXd& x, const PropOptions& opts,
                             int proposition) {
  PropositionReport rep;
  rep.proposition = proposition;

  ReducedProblem rp = reduce_problem_partial(p, positions, x);
  Solution sol = solve(rp.problem, opts.solve);
  if (sol.status != SolveStatus::Optimal)
    throw InfeasibleError("subproblem not solvable at the requested injection");

  // A binding firm constraint across the pinned/free split invalidates the
  // hour partition: the offer cost and constraint set no longer separate.
  for (int c : rp.coupling) {
    const auto& rec = rp.problem.constraints[static_cast<size_t>(c)];
    const double g = rec.f.value(sol.point);
    const bool active = rec.relation == Relation::Eq ||
                        std::abs(g) <= opts.act_tol * rec.scale;
    if (active)
      throw PartitionError("firm constraint '" + rec.tag.text +
                           "' couples the pinned and free hour sets and is "
                           "binding; the partition is invalid");
  }

  rep.smoothness = sol.marginal_offers.empty() ? Verdict::Pass : Verdict::Fail;
  if (rep.smoothness == Verdict::Fail)
    rep.notes += "dispatch rests on a bid breakpoint; ";

  BindingSet bs = binding_set(rp.problem, sol, opts.act_tol, opts.mult_tol);
  for (const auto& e : bs.entries)
    if (e.degenerate)
      rep.degenerate.push_back(
          rp.problem.constraints[static_cast<size_t>(e.constraint)].tag.text);

  // Prop 1 drops every firm unit row; the hour-subset variant keeps the free
  // part's rows in scope (the pinned part's rows were never materialized).
  ReducedSet rs = reduced_set(bs, rp.problem, proposition == 2);
  rep.binding_count = static_cast<int>(rs.constraints.size());
  rep.scope_dim = rs.scope_dim;

  rep.cardinality = cardinality_check(rs, rp.problem) ? Verdict::Pass : Verdict::Fail;
  rep.rank = licq(rs, rp.problem, sol);
  rep.licq_verdict = rep.rank.pass ? Verdict::Pass : Verdict::Fail;
  rep.kernel = kernel_hessian(rs, rp.problem, sol);
  rep.kernel_verdict = rep.kernel.pass ? Verdict::Pass : Verdict::Fail;
  rep.probe = binding_stability_probe(p, positions, x, opts);
  rep.stability = rep.probe.pass ? Verdict::Pass : Verdict::Fail;
  rep.convex = convexity_check(rp.problem, rs);
  rep.convexity = rep.convex.verdict;

  rep.uniqueness = (rep.kernel_verdict == Verdict::Pass &&
                    rep.stability == Verdict::Pass)
                       ? Verdict::ProxyVerified
                       : Verdict::Fail;

  if (rep.structural_pass() && opts.offer_independence) {
    Eigen::VectorXd base_lmps = firm_lmps(rp, sol);
    bool checked = false;
    const double dev =
        offer_independence_dev(p, positions, x, base_lmps, opts, &checked);
    rep.offer_independence_checked = checked;
    if (checked && std::isfinite(dev)) {
      rep.offer_independence_dev = dev;
      if (dev > 1e-8) {
        rep.notes += "offer-independence deviation above tolerance; ";
        rep.guarantee = Guarantee::None;
        return rep;
      }
    }
  }

  if (!rep.structural_pass()) {
    rep.guarantee = Guarantee::None;
    if (!rep.degenerate.empty())
      rep.notes += "weakly-active binding rows forbid rank-based guarantees; ";
  } else if (rep.convexity == ConvexityVerdict::Strict) {
    rep.guarantee = Guarantee::SymmetryND;
  } else if (rep.convexity == ConvexityVerdict::Weak) {
    rep.guarantee = Guarantee::SymmetryNSD;
  } else {
    rep.guarantee = Guarantee::SymmetryOnly;
  }
  return rep;
}

}  // namespace

PropositionReport check_prop1(const Problem& p, const Eigen::VectorXd& x,
                              const PropOptions& opts) {
  std::vector<int> all(p.firm_index.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return check_impl(p, all, x, opts, 1);
}

PropositionReport check_prop2(const Problem& p, const HourPartition& part,
                              const Eigen::VectorXd& x_pinned,
                              const PropOptions& opts) {
  std::vector<int> positions = part.pinned_positions;
  std::sort(positions.begin(), positions.end());
  for (int pos : positions)
    if (pos < 0 || pos >= static_cast<int>(p.firm_index.size()))
      throw PartitionError("partition position " + std::to_string(pos) +
                           " is outside the firm index set");
  if (std::adjacent_find(positions.begin(), positions.end()) != positions.end())
    throw PartitionError("partition repeats a firm index");
  const int prop = positions.size() == p.firm_index.size() ? 1 : 2;
  return check_impl(p, positions, x_pinned, opts, prop);
}

}  // namespace lmpsens
