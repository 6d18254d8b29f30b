#include "lmpsens/crosscheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace lmpsens {

double symmetry_defect(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("symmetry_defect: matrix must be square");
  return (m - m.transpose()).lpNorm<Eigen::Infinity>();
}

EigenPairs eigen_decompose(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const int n = static_cast<int>(sym.rows());
  EigenPairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Ascending from the solver; report descending with a fixed sign convention.
  for (int i = 0; i < n; ++i) {
    out.values[i] = es.eigenvalues()[n - 1 - i];
    Eigen::VectorXd v = es.eigenvectors().col(n - 1 - i);
    for (int j = 0; j < n; ++j) {
      if (std::abs(v[j]) > 1e-12) {
        if (v[j] < 0) v = -v;
        break;
      }
    }
    out.vectors.col(i) = v;
  }
  return out;
}

std::string to_string(DefinitenessClass c) {
  switch (c) {
    case DefinitenessClass::NegativeDefinite: return "negative-definite";
    case DefinitenessClass::NegativeSemidefinite: return "negative-semidefinite";
    case DefinitenessClass::Indefinite: return "indefinite";
    case DefinitenessClass::PositiveSemidefinite: return "positive-semidefinite";
    case DefinitenessClass::PositiveDefinite: return "positive-definite";
  }
  return "?";
}

DefinitenessClass classify_definiteness(const Eigen::MatrixXd& m, double tol) {
  if (tol <= 0.0) tol = 1e-8 * std::max(1.0, m.lpNorm<Eigen::Infinity>());
  EigenPairs ep = eigen_decompose(m);
  const double lo = ep.values.minCoeff();
  const double hi = ep.values.maxCoeff();
  if (hi < -tol) return DefinitenessClass::NegativeDefinite;
  if (lo > tol) return DefinitenessClass::PositiveDefinite;
  if (hi <= tol) return DefinitenessClass::NegativeSemidefinite;
  if (lo >= -tol) return DefinitenessClass::PositiveSemidefinite;
  return DefinitenessClass::Indefinite;
}

namespace {

// Quantity box of each firm variable, read off the unit-limit records.
void firm_boxes(const Problem& p, std::vector<double>& lo, std::vector<double>& hi) {
  const size_t k = p.firm_index.size();
  lo.assign(k, -1e300);
  hi.assign(k, 1e300);
  for (size_t j = 0; j < k; ++j) {
    const int var = p.firm_index[j].var;
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
}

// Firm offer-cost contribution of the assembled objective at injection x
// (zero for costless injections).
double firm_objective_terms(const Problem& p, const Eigen::VectorXd& x) {
  std::vector<int> var_pos(static_cast<size_t>(p.dim()), -1);
  for (size_t j = 0; j < p.firm_index.size(); ++j)
    var_pos[static_cast<size_t>(p.firm_index[j].var)] = static_cast<int>(j);
  double v = 0.0;
  for (const auto& t : p.objective.lin)
    if (var_pos[static_cast<size_t>(t.var)] >= 0)
      v += t.coeff * x[var_pos[static_cast<size_t>(t.var)]];
  for (const auto& t : p.objective.quad) {
    const int p1 = var_pos[static_cast<size_t>(t.v1)], p2 = var_pos[static_cast<size_t>(t.v2)];
    if (p1 >= 0 && p2 >= 0) v += t.coeff * x[p1] * x[p2];
  }
  return v;
}

// Outer objective W(x) + firm terms; -inf when the subproblem is infeasible.
double outer_value(const Problem& p, const Eigen::VectorXd& x,
                   const SolveOptions& opts) {
  SubproblemResult r = solve_subproblem(p, x, opts);
  if (r.solution.status != SolveStatus::Optimal)
    return -std::numeric_limits<double>::infinity();
  return r.welfare + firm_objective_terms(p, x);
}

// Grid-and-refine maximization over the firm box (dimension 1 or 2).
double outer_search(const Problem& p, const CrossCheckOptions& opts) {
  std::vector<double> lo, hi;
  firm_boxes(p, lo, hi);
  const int k = static_cast<int>(p.firm_index.size());
  const int g = std::max(3, opts.grid_points);

  std::vector<double> wlo = lo, whi = hi;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(k);

  for (int round = 0; round < opts.grid_refine; ++round) {
    double span = 0.0;
    for (int j = 0; j < k; ++j) span = std::max(span, whi[static_cast<size_t>(j)] - wlo[static_cast<size_t>(j)]);
    Eigen::VectorXd x(k);
    if (k == 1) {
      for (int i = 0; i < g; ++i) {
        x[0] = wlo[0] + (whi[0] - wlo[0]) * i / (g - 1);
        const double v = outer_value(p, x, opts.sens.solve);
        if (v > best) {
          best = v;
          best_x = x;
        }
      }
    } else {
      for (int i = 0; i < g; ++i) {
        x[0] = wlo[0] + (whi[0] - wlo[0]) * i / (g - 1);
        for (int i2 = 0; i2 < g; ++i2) {
          x[1] = wlo[1] + (whi[1] - wlo[1]) * i2 / (g - 1);
          const double v = outer_value(p, x, opts.sens.solve);
          if (v > best) {
            best = v;
            best_x = x;
          }
        }
      }
    }
    if (span < 1e-10 * std::max(1.0, best_x.lpNorm<Eigen::Infinity>())) break;
    for (int j = 0; j < k; ++j) {
      const double step = (whi[static_cast<size_t>(j)] - wlo[static_cast<size_t>(j)]) / (g - 1);
      wlo[static_cast<size_t>(j)] = std::max(lo[static_cast<size_t>(j)], best_x[j] - 1.5 * step);
      whi[static_cast<size_t>(j)] = std::min(hi[static_cast<size_t>(j)], best_x[j] + 1.5 * step);
    }
  }
  return best;
}

}  // namespace

CrossCheckReport cross_check(const Problem& p, const Eigen::VectorXd& x,
                             const CrossCheckOptions& opts) {
  CrossCheckReport rep;
  rep.prop1 = check_prop1(p, x, opts.prop);

  ReducedProblem rp = reduce_problem(p, x);
  Solution sol = solve(rp.problem, opts.sens.solve);
  rep.kkt = response_matrix_kkt(rp, sol, opts.sens);
  rep.projection = response_matrix_projection(rp, sol, opts.sens);
  rep.fd = response_matrix_fd(p, x, opts.sens);

  rep.dev_kkt_projection =
      (rep.kkt.m - rep.projection.matrix.m).lpNorm<Eigen::Infinity>();
  rep.dev_kkt_fd = (rep.kkt.m - rep.fd.m).lpNorm<Eigen::Infinity>();
  rep.symmetry = symmetry_defect(rep.kkt.m);
  rep.spectrum = eigen_decompose(rep.kkt.m);
  rep.dclass = classify_definiteness(rep.kkt.m);

  auto breach = [&](const std::string& what) { rep.breaches.push_back(what); };
  if (rep.dev_kkt_projection > opts.tol_routes) {
    std::ostringstream m;
    m << "kkt vs projection deviation " << rep.dev_kkt_projection << " > "
      << opts.tol_routes;
    breach(m.str());
  }
  if (rep.dev_kkt_fd > opts.tol_fd) {
    std::ostringstream m;
    m << "kkt vs finite-difference deviation " << rep.dev_kkt_fd << " > "
      << opts.tol_fd;
    breach(m.str());
  }
  if (rep.projection.split_deviation > opts.tol_split) {
    std::ostringstream m;
    m << "objective/constraint split deviation "
      << rep.projection.split_deviation << " > " << opts.tol_split;
    breach(m.str());
  }
  if (rep.prop1.guarantee != Guarantee::None) {
    if (rep.symmetry > opts.tol_symmetry) {
      std::ostringstream m;
      m << "symmetry defect " << rep.symmetry << " > " << opts.tol_symmetry;
      breach(m.str());
    }
    if (rep.prop1.guarantee != Guarantee::SymmetryOnly &&
        rep.dclass != DefinitenessClass::NegativeDefinite &&
        rep.dclass != DefinitenessClass::NegativeSemidefinite) {
      breach("guaranteed sign definiteness not observed (class " +
             to_string(rep.dclass) + ")");
    }
    if (rep.prop1.guarantee == Guarantee::SymmetryND &&
        rep.dclass != DefinitenessClass::NegativeDefinite) {
      breach("strict concavity promised negative definiteness, observed " +
             to_string(rep.dclass));
    }
  }

  if (opts.evaluate_nested && p.firm_index.size() >= 1 && p.firm_index.size() <= 2) {
    rep.nested_evaluated = true;
    Solution full = solve(p, opts.sens.solve);
    rep.full_objective = full.objective;
    rep.outer_objective = outer_search(p, opts);
    rep.nested_gap = std::abs(rep.full_objective - rep.outer_objective);
    if (!(rep.nested_gap <= opts.tol_nested)) {
      std::ostringstream m;
      m << "nested-equivalence gap " << rep.nested_gap << " > " << opts.tol_nested;
      breach(m.str());
    }
  }

  rep.pass = rep.breaches.empty();
  return rep;
}

}  // namespace lmpsens
