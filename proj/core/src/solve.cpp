#include "lmpsens/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Dense>

namespace lmpsens {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIterations: return "max-iterations";
  }
  return "?";
}

std::string to_string(PartitionLabel l) {
  switch (l) {
    case PartitionLabel::FirmUnit: return "C_x";
    case PartitionLabel::OtherUnit: return "C_y";
    case PartitionLabel::FirmBalance: return "C_xu";
    case PartitionLabel::OtherBalance: return "C_yu";
    case PartitionLabel::Network: return "C_u";
  }
  return "?";
}

bool BindingSet::contains(int constraint) const {
  for (const auto& e : entries)
    if (e.constraint == constraint) return true;
  return false;
}

std::vector<int> BindingSet::indices() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.constraint);
  return out;
}

namespace {

constexpr double kRankTol = 1e-9;      // dependent-gradient rejection
constexpr double kNewtonTol = 1e-12;   // inner stationary-system residual
constexpr double kStepTol = 1e-11;     // "no move" threshold
constexpr double kFlatTol = 1e-10;     // projected-gradient flatness

struct ActiveSetSolver {
  const Problem& p;
  const SolveOptions& opts;
  int n;

  explicit ActiveSetSolver(const Problem& prob, const SolveOptions& o)
      : p(prob), opts(o), n(prob.dim()) {}

  double cval(int m, const Eigen::VectorXd& z) const {
    return p.constraints[static_cast<size_t>(m)].f.value(z);
  }
  Eigen::VectorXd cgrad(int m, const Eigen::VectorXd& z) const {
    return p.constraints[static_cast<size_t>(m)].f.gradient(z, n);
  }
  double cscale(int m) const { return p.constraints[static_cast<size_t>(m)].scale; }
  bool is_eq(int m) const {
    return p.constraints[static_cast<size_t>(m)].relation == Relation::Eq;
  }

  Eigen::MatrixXd jacobian(const std::vector<int>& w, const Eigen::VectorXd& z) const {
    Eigen::MatrixXd A(static_cast<int>(w.size()), n);
    for (size_t i = 0; i < w.size(); ++i) A.row(static_cast<int>(i)) = cgrad(w[i], z);
    return A;
  }

  Eigen::MatrixXd lagrangian_hessian(const std::vector<int>& w,
                                     const Eigen::VectorXd& lam) const {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    p.objective.add_hessian(H, 1.0);
    for (size_t i = 0; i < w.size(); ++i)
      p.constraints[static_cast<size_t>(w[i])].f.add_hessian(H, -lam[static_cast<int>(i)]);
    return H;
  }

  bool row_independent(const Eigen::MatrixXd& A, const Eigen::VectorXd& g) const {
    if (A.rows() == 0) return g.lpNorm<Eigen::Infinity>() > kRankTol;
    if (A.rows() >= n) return false;
    Eigen::VectorXd y = A.transpose().colPivHouseholderQr().solve(g);
    const double res = (A.transpose() * y - g).norm();
    return res > kRankTol * std::max(1.0, g.norm());
  }

  struct EqpOutcome {
    enum Kind { Converged, Ray, Stuck } kind = Stuck;
    Eigen::VectorXd z;
    Eigen::VectorXd lam;  // per working-set row
    Eigen::VectorXd ray;  // ascent direction when kind == Ray
  };

  // Stationary point of the objective restricted to the working-set face,
  // via Newton on the first-order system. One step suffices when every
  // constraint in the set is linear.
  EqpOutcome solve_eqp(const std::vector<int>& w, Eigen::VectorXd z,
                       Eigen::VectorXd lam) const {
    const int m = static_cast<int>(w.size());
    const double fscale = 1.0 + p.objective.gradient(z, n).lpNorm<Eigen::Infinity>();
    double prev_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_newton; ++it) {
      Eigen::VectorXd gradU = p.objective.gradient(z, n);
      Eigen::MatrixXd A = jacobian(w, z);
      Eigen::VectorXd F(n + m);
      F.head(n) = gradU - A.transpose() * lam;
      for (int i = 0; i < m; ++i) F[n + i] = -cval(w[static_cast<size_t>(i)], z);
      const double res = F.lpNorm<Eigen::Infinity>();
      if (res <= kNewtonTol * fscale) {
        EqpOutcome out;
        out.kind = EqpOutcome::Converged;
        out.z = z;
        out.lam = lam;
        return out;
      }
      if (res > 10.0 * prev_res && it > 2) break;  // diverging
      prev_res = res;

      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + m, n + m);
      J.topLeftCorner(n, n) = lagrangian_hessian(w, lam);
      J.topRightCorner(n, m) = -A.transpose();
      J.bottomLeftCorner(m, n) = -A;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      lu.setThreshold(1e-11);
      if (!lu.isInvertible()) return fallback(w, z, A, gradU);
      Eigen::VectorXd step = lu.solve(-F);
      z += step.head(n);
      lam += step.tail(m);
    }
    EqpOutcome out;
    out.kind = EqpOutcome::Stuck;
    out.z = z;
    out.lam = lam;
    return out;
  }

  // Singular stationary system: either the face is flat in some feasible
  // direction (ray to ascend) or flat with zero gradient (any point on the
  // face is stationary; report least-squares multipliers).
  EqpOutcome fallback(const std::vector<int>& w, const Eigen::VectorXd& z,
                      const Eigen::MatrixXd& A, const Eigen::VectorXd& gradU) const {
    EqpOutcome out;
    out.z = z;
    Eigen::VectorXd lam_ls;
    Eigen::VectorXd resid = gradU;
    if (A.rows() > 0) {
      lam_ls = A.transpose().colPivHouseholderQr().solve(gradU);
      resid = gradU - A.transpose() * lam_ls;
    } else {
      lam_ls.resize(0);
    }
    Eigen::VectorXd d = resid;
    if (A.rows() > 0) {
      // Project the residual onto ker(A) exactly.
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      int rank = 0;
      for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > kRankTol * std::max(1.0, sv[0])) ++rank;
      if (rank >= n) {
        out.kind = EqpOutcome::Converged;
        out.lam = lam_ls;
        return out;
      }
      Eigen::MatrixXd K = svd.matrixV().rightCols(n - rank);
      d = K * (K.transpose() * resid);
    }
    if (d.lpNorm<Eigen::Infinity>() <= kFlatTol * (1.0 + gradU.lpNorm<Eigen::Infinity>())) {
      out.kind = EqpOutcome::Converged;
      out.lam = lam_ls;
      return out;
    }
    out.kind = EqpOutcome::Ray;
    out.lam = lam_ls;
    out.ray = d / d.lpNorm<Eigen::Infinity>();
    return out;
  }

  // Smallest t in (0, tmax] at which inactive inequality m crosses zero along
  // z + t d; +inf when it stays feasible.
  double crossing(int m, const Eigen::VectorXd& z, const Eigen::VectorXd& d,
                  double tmax) const {
    const auto& f = p.constraints[static_cast<size_t>(m)].f;
    double a = 0.0;
    for (const auto& t : f.quad)
      a += (t.v1 == t.v2) ? t.coeff * d[t.v1] * d[t.v1] : t.coeff * d[t.v1] * d[t.v2];
    const double b = f.gradient(z, n).dot(d);
    const double c0 = f.value(z);
    const double inf = std::numeric_limits<double>::infinity();
    auto accept = [&](double t) { return t > 1e-14 && t <= tmax; };
    if (std::abs(a) < 1e-14) {
      if (b <= 1e-14) return inf;
      const double t = -c0 / b;
      return accept(t) ? t : inf;
    }
    const double disc = b * b - 4.0 * a * c0;
    if (disc < 0.0) return inf;
    const double sq = std::sqrt(disc);
    double best = inf;
    for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
      if (!accept(t)) continue;
      // Only count crossings into the infeasible side.
      if (2.0 * a * t + b > 0.0 && t < best) best = t;
    }
    return best;
  }

  // Maximizes from a feasible point. Assumes equalities hold at z0 within
  // tolerance and no inequality is violated beyond act_tol.
  Solution run_phase2(Eigen::VectorXd z, std::vector<int> seed_active) const {
    std::vector<int> w;  // working set
    Eigen::MatrixXd Aw(0, n);
    auto try_add = [&](int m) -> bool {
      if (std::find(w.begin(), w.end(), m) != w.end()) return false;
      Eigen::VectorXd g = cgrad(m, z);
      if (!row_independent(Aw, g)) return false;
      w.push_back(m);
      Aw.conservativeResize(Aw.rows() + 1, n);
      Aw.row(Aw.rows() - 1) = g;
      return true;
    };
    auto rebuild_rows = [&]() {
      Aw.resize(static_cast<int>(w.size()), n);
      for (size_t i = 0; i < w.size(); ++i) Aw.row(static_cast<int>(i)) = cgrad(w[i], z);
    };

    for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m)
      if (is_eq(m)) try_add(m);
    for (int m : seed_active)
      if (!is_eq(m) && std::abs(cval(m, z)) <= 10.0 * opts.act_tol * cscale(m)) try_add(m);

    Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<int>(w.size()));

    Solution sol;
    sol.local_only = p.has_nonconvex_constraint;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
      EqpOutcome eqp = solve_eqp(w, z, lam);
      if (eqp.kind == EqpOutcome::Stuck) break;

      Eigen::VectorXd d;
      bool ray = false;
      if (eqp.kind == EqpOutcome::Ray) {
        d = eqp.ray;
        ray = true;
      } else {
        d = eqp.z - z;
      }
      const double dn = d.lpNorm<Eigen::Infinity>();

      if (!ray && dn <= kStepTol * (1.0 + z.lpNorm<Eigen::Infinity>())) {
        lam = eqp.lam;
        // Stationary on this face; release the most negative inequality
        // multiplier, lowest index on ties.
        int release = -1;
        double worst = -opts.tol;
        for (size_t i = 0; i < w.size(); ++i) {
          if (is_eq(w[i])) continue;
          if (lam[static_cast<int>(i)] < worst) {
            worst = lam[static_cast<int>(i)];
            release = static_cast<int>(i);
          }
        }
        if (release < 0) {
          z = eqp.z;
          return finish(z, w, lam);
        }
        w.erase(w.begin() + release);
        Eigen::VectorXd lam2(static_cast<int>(w.size()));
        for (int i = 0, j = 0; i < lam.size(); ++i)
          if (i != release) lam2[j++] = lam[i];
        lam = lam2;
        rebuild_rows();
        continue;
      }

      // Ratio test along the straight step.
      double tmax = ray ? 1e12 : 1.0;
      int blocker = -1;
      for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m) {
        if (is_eq(m)) continue;
        if (std::find(w.begin(), w.end(), m) != w.end()) continue;
        const double t = crossing(m, z, d, tmax);
        if (t < tmax - 1e-15) {
          tmax = t;
          blocker = m;
        }
      }
      if (ray) {
        // Concave curvature along the ray caps the step even unblocked.
        double a = 0.0;
        for (const auto& t : p.objective.quad)
          a += (t.v1 == t.v2) ? t.coeff * d[t.v1] * d[t.v1]
                              : t.coeff * d[t.v1] * d[t.v2];
        const double b = p.objective.gradient(z, n).dot(d);
        if (a < -1e-14) {
          const double topt = -b / (2.0 * a);
          if (topt < tmax) {
            tmax = topt;
            blocker = -1;
          }
        }
        if (blocker < 0 && tmax >= 1e11) {
          break;  // unbounded ascent: compactness violated upstream
        }
      }
      z += std::min(tmax, ray ? tmax : 1.0) * d;
      lam = Eigen::VectorXd::Zero(static_cast<int>(w.size()));
      if (blocker >= 0) {
        rebuild_rows();
        try_add(blocker);
        rebuild_rows();
      }
      // Nonlinear equalities can drift inequalities past feasibility at the
      // new point; bring the most violated one in.
      int worst_m = -1;
      double worst_v = opts.act_tol;
      for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m) {
        if (is_eq(m)) continue;
        if (std::find(w.begin(), w.end(), m) != w.end()) continue;
        const double v = cval(m, z) / cscale(m);
        if (v > worst_v) {
          worst_v = v;
          worst_m = m;
        }
      }
      if (worst_m >= 0) {
        rebuild_rows();
        try_add(worst_m);
      }
      rebuild_rows();
      lam = Eigen::VectorXd::Zero(static_cast<int>(w.size()));
    }

    // Iteration budget exhausted: report the best iterate honestly.
    Solution out = assemble_solution(z, w, lam);
    out.status = SolveStatus::MaxIterations;
    return out;
  }

  Solution finish(const Eigen::VectorXd& z, const std::vector<int>& w,
                  const Eigen::VectorXd& lam) const {
    Solution sol = assemble_solution(z, w, lam);
    // Optimality is certified at the contract tolerance; anything looser is
    // reported as an exhausted search, never dressed up.
    const bool ok = sol.stationarity <= opts.tol && sol.feasibility <= opts.tol &&
                    sol.complementarity <= opts.tol;
    sol.status = ok ? SolveStatus::Optimal : SolveStatus::MaxIterations;
    return sol;
  }

  Solution assemble_solution(const Eigen::VectorXd& z, const std::vector<int>& w,
                             const Eigen::VectorXd& lam) const {
    Solution sol;
    sol.local_only = p.has_nonconvex_constraint;
    sol.point = z;
    sol.multipliers = Eigen::VectorXd::Zero(static_cast<int>(p.constraints.size()));
    for (size_t i = 0; i < w.size(); ++i)
      sol.multipliers[w[i]] = lam.size() > static_cast<int>(i) ? lam[static_cast<int>(i)] : 0.0;
    sol.objective = p.objective.value(z);
    Residuals r = kkt_residual(p, z, sol.multipliers);
    sol.stationarity = r.stationarity;
    sol.feasibility = r.feasibility;
    sol.complementarity = r.complementarity;
    sol.active = w;
    std::sort(sol.active.begin(), sol.active.end());
    for (const auto& [var, bp] : p.breakpoint_watch)
      if (std::abs(z[var] - bp) <= opts.act_tol * std::max(1.0, std::abs(bp)))
        sol.marginal_offers.push_back(var);
    return sol;
  }
};

// Per-variable boxes implied by UnitLimit records, for the phase-1 start.
struct VarBox {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

std::vector<VarBox> variable_boxes(const Problem& p) {
  std::vector<VarBox> box(static_cast<size_t>(p.dim()));
  for (const auto& c : p.constraints) {
    if (c.tag.type != ConstraintType::UnitLimit || c.f.lin.size() != 1) continue;
    const int v = c.f.lin[0].var;
    const double a = c.f.lin[0].coeff;
    if (c.relation == Relation::Eq) {
      box[static_cast<size_t>(v)].lo = box[static_cast<size_t>(v)].hi = -c.f.constant / a;
    } else if (a > 0) {
      box[static_cast<size_t>(v)].hi = std::min(box[static_cast<size_t>(v)].hi, -c.f.constant / a);
    } else {
      box[static_cast<size_t>(v)].lo = std::max(box[static_cast<size_t>(v)].lo, -c.f.constant / a);
    }
  }
  return box;
}

}  // namespace

Residuals kkt_residual(const Problem& p, const Eigen::VectorXd& point,
                       const Eigen::VectorXd& multipliers) {
  const int n = p.dim();
  Eigen::VectorXd stat = p.objective.gradient(point, n);
  double feas = 0.0, comp = 0.0;
  for (size_t m = 0; m < p.constraints.size(); ++m) {
    const auto& c = p.constraints[m];
    const double lam = multipliers[static_cast<int>(m)];
    const double g = c.f.value(point);
    if (lam != 0.0) stat -= lam * c.f.gradient(point, n);
    if (c.relation == Relation::Eq) {
      feas = std::max(feas, std::abs(g));
    } else {
      feas = std::max(feas, std::max(0.0, g));
      comp = std::max(comp, std::abs(lam * g));
    }
  }
  return {stat.lpNorm<Eigen::Infinity>(), feas, comp};
}

Solution solve(const Problem& p, const SolveOptions& opts) {
  ActiveSetSolver as(p, opts);
  const int n = p.dim();

  // Start point: quantities clamped to their boxes, angles at zero.
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n);
  const auto box = variable_boxes(p);
  for (int v = 0; v < n; ++v) {
    double x = 0.0;
    if (std::isfinite(box[static_cast<size_t>(v)].lo)) x = std::max(x, box[static_cast<size_t>(v)].lo);
    if (std::isfinite(box[static_cast<size_t>(v)].hi)) x = std::min(x, box[static_cast<size_t>(v)].hi);
    z0[v] = x;
  }

  double infeas = 0.0;
  for (const auto& c : p.constraints) {
    const double g = c.f.value(z0);
    infeas = std::max(infeas, c.relation == Relation::Eq ? std::abs(g) / c.scale
                                                         : g / c.scale);
  }

  if (infeas > opts.act_tol) {
    // Phase 1: slack every non-box constraint that can miss the start point
    // and drive the slacks to zero.
    Problem ph;
    ph.vars = p.vars;
    ph.hours = p.hours;
    ph.node_names = p.node_names;
    int nslack = 0;
    std::vector<int> slack_of(p.constraints.size(), -1);
    for (size_t m = 0; m < p.constraints.size(); ++m) {
      const auto& c = p.constraints[m];
      const bool is_box = c.tag.type == ConstraintType::UnitLimit;
      if (is_box) continue;
      slack_of[m] = n + nslack;
      ph.vars.push_back({VarKind::UnitPower, -1, 0,
                         "slack:" + c.tag.text});
      ++nslack;
    }
    for (size_t m = 0; m < p.constraints.size(); ++m) {
      ConstraintRecord c = p.constraints[m];
      if (slack_of[m] >= 0) {
        // eq: g + s = 0; le: g - s <= 0 with s >= 0.
        c.f.lin.push_back({slack_of[m], c.relation == Relation::Eq ? 1.0 : -1.0});
      }
      ph.constraints.push_back(std::move(c));
    }
    for (size_t m = 0; m < p.constraints.size(); ++m) {
      if (slack_of[m] < 0 || p.constraints[m].relation != Relation::Le) continue;
      ConstraintRecord c;
      c.tag = {ConstraintType::UnitLimit, -1, 0, 0, 0,
               "slack-lo:" + p.constraints[m].tag.text};
      c.relation = Relation::Le;
      c.f.lin.push_back({slack_of[m], -1.0});
      ph.constraints.push_back(std::move(c));
    }
    for (auto& c : ph.constraints) {
      double amax = 0.0;
      for (const auto& t : c.f.lin) amax = std::max(amax, std::abs(t.coeff));
      c.scale = std::max(1.0, amax);
    }
    for (int s = 0; s < nslack; ++s)
      ph.objective.quad.push_back({n + s, n + s, -1.0});

    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(n + nslack);
    z1.head(n) = z0;
    for (size_t m = 0; m < p.constraints.size(); ++m) {
      if (slack_of[m] < 0) continue;
      const double g = p.constraints[m].f.value(z0);
      z1[slack_of[m]] = p.constraints[m].relation == Relation::Eq ? -g : std::max(0.0, g);
    }

    SolveOptions ph_opts = opts;
    ph_opts.initial_active.clear();
    ActiveSetSolver as1(ph, ph_opts);
    std::vector<int> seed;
    for (int m = 0; m < static_cast<int>(ph.constraints.size()); ++m)
      if (ph.constraints[static_cast<size_t>(m)].relation == Relation::Le &&
          std::abs(ph.constraints[static_cast<size_t>(m)].f.value(z1)) <=
              ph_opts.act_tol * ph.constraints[static_cast<size_t>(m)].scale)
        seed.push_back(m);
    Solution ph_sol = as1.run_phase2(z1, seed);
    const double smax = nslack > 0 ? ph_sol.point.tail(nslack).lpNorm<Eigen::Infinity>() : 0.0;
    if (ph_sol.status != SolveStatus::Optimal && ph_sol.status != SolveStatus::MaxIterations) {
      Solution out;
      out.status = SolveStatus::Infeasible;
      return out;
    }
    if (smax > 100.0 * opts.tol) {
      Solution out;
      // Residual slack at a phase-1 optimum certifies infeasibility; an
      // exhausted iteration budget certifies nothing.
      out.status = ph_sol.status == SolveStatus::Optimal
                       ? SolveStatus::Infeasible
                       : SolveStatus::MaxIterations;
      out.point = ph_sol.point.head(n);
      out.multipliers = Eigen::VectorXd::Zero(static_cast<int>(p.constraints.size()));
      out.feasibility = smax;
      out.objective = p.objective.value(out.point);
      out.local_only = p.has_nonconvex_constraint;
      return out;
    }
    z0 = ph_sol.point.head(n);
  }

  std::vector<int> seed = opts.initial_active;
  for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m)
    if (!as.is_eq(m) &&
        std::abs(p.constraints[static_cast<size_t>(m)].f.value(z0)) <=
            opts.act_tol * p.constraints[static_cast<size_t>(m)].scale)
      seed.push_back(m);
  return as.run_phase2(z0, seed);
}

BindingSet binding_set(const Problem& p, const Solution& sol, double act_tol,
                       double mult_tol) {
  BindingSet bs;
  std::set<int> firm_nodes_hours;  // encoded node * (hours+1) + hour
  for (const auto& [node, hour] : p.firm_locations)
    firm_nodes_hours.insert(node * (p.hours + 1) + hour);

  for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m) {
    const auto& c = p.constraints[static_cast<size_t>(m)];
    const double g = c.f.value(sol.point);
    const bool active = c.relation == Relation::Eq ||
                        std::abs(g) <= act_tol * c.scale;
    if (!active) continue;

    PartitionLabel label;
    switch (c.tag.type) {
      case ConstraintType::NodalBalance:
        label = firm_nodes_hours.count(c.tag.entity * (p.hours + 1) + c.tag.hour)
                    ? PartitionLabel::FirmBalance
                    : PartitionLabel::OtherBalance;
        break;
      case ConstraintType::UnitLimit:
      case ConstraintType::Ramp:
        label = (!c.owner_firm.empty() && c.owner_firm == p.firm_of_interest)
                    ? PartitionLabel::FirmUnit
                    : PartitionLabel::OtherUnit;
        break;
      default:
        label = PartitionLabel::Network;
    }
    const bool degen = c.relation == Relation::Le &&
                       std::abs(sol.multipliers[m]) <= mult_tol;
    bs.entries.push_back({m, label, degen});
  }
  return bs;
}

std::map<std::pair<int, int>, double> lmp_table(const Problem& p,
                                                const Solution& sol) {
  std::map<std::pair<int, int>, double> out;
  for (int node = 0; node < static_cast<int>(p.node_names.size()); ++node)
    for (int h = 1; h <= p.hours; ++h) {
      const int m = p.balance_index(node, h);
      if (m >= 0) out[{node, h}] = sol.multipliers[m];
    }
  return out;
}

namespace {

ReducedProblem reduce_impl(const Problem& p, const std::vector<int>& positions,
                           const Eigen::VectorXd& x_pinned) {
  ReducedProblem rp;
  rp.pinned_positions = positions;
  rp.pinned_values = x_pinned;

  std::vector<double> pin_value(static_cast<size_t>(p.dim()),
                                std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> pinned(static_cast<size_t>(p.dim()), false);
  for (size_t k = 0; k < positions.size(); ++k) {
    const auto& fe = p.firm_index[static_cast<size_t>(positions[k])];
    pinned[static_cast<size_t>(fe.var)] = true;
    pin_value[static_cast<size_t>(fe.var)] = x_pinned[static_cast<int>(k)];
    rp.pinned_index.push_back(fe);
  }

  Problem& q = rp.problem;
  q.hours = p.hours;
  q.node_names = p.node_names;
  q.unit_names = p.unit_names;
  q.unit_firms = p.unit_firms;
  q.firm_of_interest = p.firm_of_interest;
  q.firm_locations = p.firm_locations;
  q.has_nonconvex_constraint = p.has_nonconvex_constraint;

  std::vector<int> new_of(static_cast<size_t>(p.dim()), -1);
  for (int v = 0; v < p.dim(); ++v) {
    if (pinned[static_cast<size_t>(v)]) continue;
    new_of[static_cast<size_t>(v)] = q.dim();
    q.vars.push_back(p.vars[static_cast<size_t>(v)]);
  }
  rp.kept_vars.resize(static_cast<size_t>(q.dim()));
  for (int v = 0; v < p.dim(); ++v)
    if (new_of[static_cast<size_t>(v)] >= 0)
      rp.kept_vars[static_cast<size_t>(new_of[static_cast<size_t>(v)])] = v;

  // Objective: drop the firm's cost terms on pinned variables entirely (the
  // residual-market utility excludes them); keep everything else.
  for (const auto& t : p.objective.lin)
    if (!pinned[static_cast<size_t>(t.var)])
      q.objective.lin.push_back({new_of[static_cast<size_t>(t.var)], t.coeff});
  for (const auto& t : p.objective.quad) {
    const bool p1 = pinned[static_cast<size_t>(t.v1)], p2 = pinned[static_cast<size_t>(t.v2)];
    if (p1 || p2) continue;  // bid terms never couple distinct units
    q.objective.quad.push_back(
        {new_of[static_cast<size_t>(t.v1)], new_of[static_cast<size_t>(t.v2)], t.coeff});
  }
  q.objective.constant = p.objective.constant;

  for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m) {
    const auto& c = p.constraints[static_cast<size_t>(m)];
    bool touches_pinned = false, touches_kept = false;
    auto scan = [&](int v) {
      (pinned[static_cast<size_t>(v)] ? touches_pinned : touches_kept) = true;
    };
    for (const auto& t : c.f.lin) scan(t.var);
    for (const auto& t : c.f.quad) {
      scan(t.v1);
      scan(t.v2);
    }
    const bool firm_unit_constraint =
        (c.tag.type == ConstraintType::UnitLimit || c.tag.type == ConstraintType::Ramp) &&
        !c.owner_firm.empty() && c.owner_firm == p.firm_of_interest;
    if (firm_unit_constraint && touches_pinned && !touches_kept) continue;  // C_x~ dropped
    if (firm_unit_constraint && touches_pinned && touches_kept)
      rp.coupling.push_back(static_cast<int>(rp.kept_constraints.size()));

    ConstraintRecord nc;
    nc.tag = c.tag;
    nc.relation = c.relation;
    nc.owner_firm = c.owner_firm;
    nc.scale = c.scale;
    nc.f.constant = c.f.constant;
    for (const auto& t : c.f.lin) {
      if (pinned[static_cast<size_t>(t.var)])
        nc.f.constant += t.coeff * pin_value[static_cast<size_t>(t.var)];
      else
        nc.f.lin.push_back({new_of[static_cast<size_t>(t.var)], t.coeff});
    }
    for (const auto& t : c.f.quad) {
      const bool p1 = pinned[static_cast<size_t>(t.v1)], p2 = pinned[static_cast<size_t>(t.v2)];
      if (p1 && p2) {
        nc.f.constant += t.coeff * pin_value[static_cast<size_t>(t.v1)] *
                         pin_value[static_cast<size_t>(t.v2)];
      } else if (p1) {
        nc.f.lin.push_back({new_of[static_cast<size_t>(t.v2)],
                            t.coeff * pin_value[static_cast<size_t>(t.v1)]});
      } else if (p2) {
        nc.f.lin.push_back({new_of[static_cast<size_t>(t.v1)],
                            t.coeff * pin_value[static_cast<size_t>(t.v2)]});
      } else {
        nc.f.quad.push_back(
            {new_of[static_cast<size_t>(t.v1)], new_of[static_cast<size_t>(t.v2)], t.coeff});
      }
    }
    rp.kept_constraints.push_back(m);
    q.constraints.push_back(std::move(nc));
  }

  for (const auto& [var, bp] : p.breakpoint_watch)
    if (!pinned[static_cast<size_t>(var)])
      q.breakpoint_watch.emplace_back(new_of[static_cast<size_t>(var)], bp);

  for (const auto& fe : p.firm_index) {
    if (pinned[static_cast<size_t>(fe.var)]) continue;
    FirmIndexEntry ne = fe;
    ne.var = new_of[static_cast<size_t>(fe.var)];
    q.firm_index.push_back(ne);
  }

  // Balance rows and parameter coefficients for each pinned variable.
  std::vector<int> new_cons(p.constraints.size(), -1);
  for (size_t r = 0; r < rp.kept_constraints.size(); ++r)
    new_cons[static_cast<size_t>(rp.kept_constraints[r])] = static_cast<int>(r);
  for (size_t k = 0; k < rp.pinned_index.size(); ++k) {
    const auto& fe = rp.pinned_index[k];
    const int orig_bal = p.balance_index(fe.node, fe.hour);
    const int red_bal = orig_bal >= 0 ? new_cons[static_cast<size_t>(orig_bal)] : -1;
    rp.pinned_balance.push_back(red_bal);
    double coeff = 0.0;
    if (orig_bal >= 0)
      for (const auto& t : p.constraints[static_cast<size_t>(orig_bal)].f.lin)
        if (t.var == fe.var) coeff += t.coeff;
    rp.pinned_balance_coeff.push_back(coeff);
  }
  return rp;
}

}  // namespace

ReducedProblem reduce_problem(const Problem& p, const Eigen::VectorXd& x) {
  std::vector<int> all(p.firm_index.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  if (x.size() != static_cast<int>(all.size()))
    throw std::invalid_argument("injection vector length " +
                                std::to_string(x.size()) +
                                " does not match firm index set size " +
                                std::to_string(all.size()));
  return reduce_impl(p, all, x);
}

ReducedProblem reduce_problem_partial(const Problem& p,
                                      const std::vector<int>& pinned_positions,
                                      const Eigen::VectorXd& x_pinned) {
  if (x_pinned.size() != static_cast<int>(pinned_positions.size()))
    throw std::invalid_argument("pinned value count mismatch");
  return reduce_impl(p, pinned_positions, x_pinned);
}

SubproblemResult solve_subproblem(const Problem& p, const Eigen::VectorXd& x,
                                  const SolveOptions& opts) {
  SubproblemResult r{reduce_problem(p, x), {}, 0.0};
  r.solution = solve(r.reduced.problem, opts);
  r.welfare = r.solution.objective;
  return r;
}

Eigen::VectorXd firm_lmps(const ReducedProblem& rp, const Solution& sol) {
  Eigen::VectorXd out(static_cast<int>(rp.pinned_index.size()));
  for (size_t k = 0; k < rp.pinned_index.size(); ++k) {
    const int row = rp.pinned_balance[k];
    out[static_cast<int>(k)] = row >= 0 ? sol.multipliers[row] : 0.0;
  }
  return out;
}

}  // namespace lmpsens
