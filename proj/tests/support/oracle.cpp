#include "support/oracle.hpp"

#include <stdexcept>

namespace oracle {

using lmpsens::Problem;
using lmpsens::Relation;

Result brute_force_solve(const Problem& p, double tol) {
  const int n = p.dim();
  std::vector<int> eqs, ineqs;
  for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m) {
    if (!p.constraints[static_cast<size_t>(m)].f.is_linear())
      throw std::invalid_argument("oracle handles linear constraints only");
    (p.constraints[static_cast<size_t>(m)].relation == Relation::Eq ? eqs : ineqs)
        .push_back(m);
  }
  if (ineqs.size() > 16)
    throw std::invalid_argument("oracle enumeration capped at 16 inequalities");

  // Objective 1/2 z'Qz + a'z + c.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  p.objective.add_hessian(Q, 1.0);
  Eigen::VectorXd a = p.objective.gradient(Eigen::VectorXd::Zero(n), n);

  // Constraints A z + b (rows per constraint).
  Eigen::MatrixXd A(static_cast<int>(p.constraints.size()), n);
  Eigen::VectorXd b(static_cast<int>(p.constraints.size()));
  for (int m = 0; m < static_cast<int>(p.constraints.size()); ++m) {
    A.row(m) = p.constraints[static_cast<size_t>(m)].f.gradient(
        Eigen::VectorXd::Zero(n), n);
    b[m] = p.constraints[static_cast<size_t>(m)].f.constant;
  }

  Result best;
  const size_t subsets = size_t{1} << ineqs.size();
  for (size_t mask = 0; mask < subsets; ++mask) {
    std::vector<int> w = eqs;
    for (size_t i = 0; i < ineqs.size(); ++i)
      if (mask & (size_t{1} << i)) w.push_back(ineqs[i]);
    const int m = static_cast<int>(w.size());
    if (m > n) continue;

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = Q;
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -a;
    for (int i = 0; i < m; ++i) {
      K.block(0, n + i, n, 1) = -A.row(w[static_cast<size_t>(i)]).transpose();
      K.block(n + i, 0, 1, n) = A.row(w[static_cast<size_t>(i)]);
      rhs[n + i] = -b[w[static_cast<size_t>(i)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) continue;
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd z = sol.head(n);
    Eigen::VectorXd lam = sol.tail(m);

    bool ok = true;
    for (int c : ineqs) {
      const double g = A.row(c).dot(z) + b[c];
      if (g > tol * p.constraints[static_cast<size_t>(c)].scale) ok = false;
    }
    for (int i = 0; i < m && ok; ++i)
      if (p.constraints[static_cast<size_t>(w[static_cast<size_t>(i)])].relation ==
              Relation::Le &&
          lam[i] < -tol)
        ok = false;
    if (!ok) continue;

    const double value = p.objective.value(z);
    if (!best.found || value > best.objective + 1e-12) {
      best.found = true;
      best.z = z;
      best.objective = value;
      best.multipliers = Eigen::VectorXd::Zero(static_cast<int>(p.constraints.size()));
      for (int i = 0; i < m; ++i)
        best.multipliers[w[static_cast<size_t>(i)]] = lam[i];
      best.active.clear();
      for (size_t i = 0; i < ineqs.size(); ++i)
        if (mask & (size_t{1} << i)) best.active.push_back(ineqs[i]);
    }
  }
  return best;
}

}  // namespace oracle
