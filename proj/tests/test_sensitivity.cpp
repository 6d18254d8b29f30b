#include <doctest.h>

#include "lmpsens/sensitivity.hpp"
#include "support/fixtures.hpp"

using namespace lmpsens;

namespace {

SubproblemResult solved(const Problem& p, const Eigen::VectorXd& x) {
  auto sub = solve_subproblem(p, x);
  REQUIRE(sub.solution.status == SolveStatus::Optimal);
  return sub;
}

}  // namespace

TEST_CASE("response: ramp2h by all three routes") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  auto sub = solved(p, x);

  Eigen::MatrixXd expect(2, 2);
  expect << -0.5, 0.5, 0.5, -0.5;

  auto kkt = response_matrix_kkt(sub.reduced, sub.solution);
  CHECK((kkt.m - expect).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(kkt.index[0].key == "n1@1");
  CHECK(kkt.index[1].key == "n1@2");

  auto proj = response_matrix_projection(sub.reduced, sub.solution);
  CHECK((proj.matrix.m - kkt.m).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(proj.split_deviation <= 1e-12);
  // All constraints are linear: the split is purely the objective term.
  CHECK(proj.constraint_term.lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((proj.objective_term - proj.matrix.m).lpNorm<Eigen::Infinity>() <= 1e-12);

  auto fd = response_matrix_fd(p, x);
  CHECK((fd.m - expect).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("response: single-node slope and decoupled twins") {
  Problem p = assemble_problem(builtin_scenario("single-node-linear"));
  Eigen::VectorXd x(1);
  x << 2.0;
  auto sub = solved(p, x);
  auto kkt = response_matrix_kkt(sub.reduced, sub.solution);
  CHECK(kkt.m(0, 0) == doctest::Approx(-0.1).epsilon(1e-10));
  auto fd = response_matrix_fd(p, x);
  CHECK(fd.m(0, 0) == doctest::Approx(-0.1).epsilon(1e-8));

  Problem twins = assemble_problem(fixtures::twin_isolated());
  REQUIRE(twins.firm_index.size() == 2);
  Eigen::VectorXd x2(2);
  x2 << 1.0, 3.0;
  auto sub2 = solved(twins, x2);
  auto k2 = response_matrix_kkt(sub2.reduced, sub2.solution);
  Eigen::MatrixXd expect = -0.1 * Eigen::MatrixXd::Identity(2, 2);
  CHECK((k2.m - expect).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("response: probe across the supplier bound raises nonsmooth") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  // x1 + x2 = 6 puts the hour-1 supplier exactly at its lower bound.
  Eigen::VectorXd x(2);
  x << 3.0, 3.0;
  CHECK_THROWS_AS(static_cast<void>(response_matrix_fd(p, x)), NonsmoothPointError);
}

TEST_CASE("response: singular bordered system reports sigma_min") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  auto sub = solved(p, x);
  // Inject a duplicate of the first balance: rank-deficient binding rows.
  sub.reduced.problem.constraints.push_back(sub.reduced.problem.constraints[0]);
  Eigen::VectorXd mult = sub.solution.multipliers;
  sub.solution.multipliers.resize(mult.size() + 1);
  sub.solution.multipliers.head(mult.size()) = mult;
  sub.solution.multipliers[mult.size()] = 0.0;
  try {
    static_cast<void>(response_matrix_kkt(sub.reduced, sub.solution));
    FAIL("expected a singular-system error");
  } catch (const SingularSystemError& e) {
    CHECK(e.sigma_min() <= 1e-10);
  }
}

TEST_CASE("value function: pinned welfare values and the (t,t) family") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  CHECK(value_function(p, x0) == doctest::Approx(105.0).epsilon(1e-10));

  // Moving both hours together leaves prices fixed while welfare moves.
  Eigen::VectorXd xa(2), xb(2);
  xa << 0.4, 0.4;
  xb << 0.8, 0.8;
  auto la = firm_lmps(solved(p, xa).reduced, solved(p, xa).solution);
  auto lb = firm_lmps(solved(p, xb).reduced, solved(p, xb).solution);
  CHECK((la - lb).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(value_function(p, xa) != doctest::Approx(value_function(p, xb)));
  CHECK((value_gradient_fd(p, xa) - value_gradient_fd(p, xb)).lpNorm<Eigen::Infinity>() <=
        1e-5);

  Eigen::VectorXd far(2);
  far << 80.0, 0.0;
  CHECK_THROWS_AS(static_cast<void>(value_function(p, far)), InfeasibleError);
}

TEST_CASE("value gradient: envelope identity against firm-node prices") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  Eigen::VectorXd g = value_gradient_fd(p, x);
  CHECK(g[0] == doctest::Approx(8.875).epsilon(1e-5));
  CHECK(g[1] == doctest::Approx(13.125).epsilon(1e-5));

  Problem p2 = assemble_problem(builtin_scenario("single-node-linear"));
  Eigen::VectorXd x2(1);
  x2 << 2.0;
  CHECK(value_gradient_fd(p2, x2)[0] == doctest::Approx(1.8).epsilon(1e-6));
}

TEST_CASE("markup: the worked 2x2 example") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  auto sub = solved(p, x);
  auto m = response_matrix_kkt(sub.reduced, sub.solution);
  CHECK(markup(m, x) == doctest::Approx(0.03125).epsilon(1e-9));

  Eigen::VectorXd same(2);
  same << 0.7, 0.7;
  CHECK(markup(m, same) == doctest::Approx(0.0));
  CHECK(markup(m, Eigen::VectorXd::Zero(2)) == doctest::Approx(0.0));

  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(static_cast<void>(markup(m, bad)), std::invalid_argument);
}

TEST_CASE("lossy network: quadratic equalities keep the routes consistent") {
  Problem p = assemble_problem(fixtures::lossy_pair());
  CHECK(p.has_nonconvex_constraint);
  Eigen::VectorXd x(1);
  x << 2.0;
  auto sub = solved(p, x);
  CHECK(sub.solution.local_only);

  auto kkt = response_matrix_kkt(sub.reduced, sub.solution);
  auto proj = response_matrix_projection(sub.reduced, sub.solution);
  auto fd = response_matrix_fd(p, x);
  CHECK((kkt.m - proj.matrix.m).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK((kkt.m - fd.m).lpNorm<Eigen::Infinity>() <= 1e-4);
  // The constraint-Hessian half of the split is live here.
  CHECK(proj.constraint_term.lpNorm<Eigen::Infinity>() > 1e-6);
  CHECK(proj.split_deviation <= 1e-12);

  // The price response drifts with the operating point: state dependence
  // that a constant-matrix model would miss.
  Eigen::VectorXd x2(1);
  x2 << 6.0;
  auto sub2 = solved(p, x2);
  auto kkt2 = response_matrix_kkt(sub2.reduced, sub2.solution);
  CHECK(std::abs(kkt2.m(0, 0) - kkt.m(0, 0)) > 1e-6);
}
