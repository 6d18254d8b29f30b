#include <doctest.h>

#include <random>

#include "lmpsens/crosscheck.hpp"
#include "support/random_scenario.hpp"

using namespace lmpsens;

TEST_CASE("symmetry_defect basics") {
  Eigen::MatrixXd sym(2, 2);
  sym << -0.5, 0.5, 0.5, -0.5;
  CHECK(symmetry_defect(sym) == doctest::Approx(0.0));

  Eigen::MatrixXd skew(2, 2);
  skew << 0, 1, 0, 0;
  CHECK(symmetry_defect(skew) == doctest::Approx(1.0));

  Eigen::MatrixXd one(1, 1);
  one << 4.2;
  CHECK(symmetry_defect(one) == doctest::Approx(0.0));
}

TEST_CASE("eigen_decompose: worked spectrum with the sign convention") {
  Eigen::MatrixXd m(2, 2);
  m << -0.5, 0.5, 0.5, -0.5;
  EigenPairs ep = eigen_decompose(m);
  CHECK(ep.values[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ep.values[1] == doctest::Approx(-1.0).epsilon(1e-12));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(ep.vectors(0, 0) == doctest::Approx(r));
  CHECK(ep.vectors(1, 0) == doctest::Approx(r));
  CHECK(ep.vectors(0, 1) == doctest::Approx(r));
  CHECK(ep.vectors(1, 1) == doctest::Approx(-r));

  Eigen::MatrixXd d = Eigen::Vector2d(-2.0, -3.0).asDiagonal();
  EigenPairs ed = eigen_decompose(d);
  CHECK(ed.values[0] == doctest::Approx(-2.0));
  CHECK(ed.values[1] == doctest::Approx(-3.0));

  EigenPairs ez = eigen_decompose(Eigen::MatrixXd::Zero(2, 2));
  CHECK(ez.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("eigen_decompose: residual property on random symmetric matrices") {
  std::mt19937 rng(11);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    EigenPairs ep = eigen_decompose(sym);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd res = sym * ep.vectors.col(i) - ep.values[i] * ep.vectors.col(i);
      CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
}

TEST_CASE("classify_definiteness: examples and the zero band") {
  Eigen::MatrixXd nsd(2, 2);
  nsd << -0.5, 0.5, 0.5, -0.5;
  CHECK(classify_definiteness(nsd) == DefinitenessClass::NegativeSemidefinite);

  Eigen::MatrixXd nd(1, 1);
  nd << -0.1;
  CHECK(classify_definiteness(nd) == DefinitenessClass::NegativeDefinite);

  Eigen::MatrixXd ind(2, 2);
  ind << 0, 1, 1, 0;
  CHECK(classify_definiteness(ind) == DefinitenessClass::Indefinite);

  CHECK(classify_definiteness(Eigen::MatrixXd::Zero(3, 3)) ==
        DefinitenessClass::NegativeSemidefinite);
  CHECK(classify_definiteness(Eigen::MatrixXd::Identity(2, 2)) ==
        DefinitenessClass::PositiveDefinite);
  Eigen::MatrixXd psd(2, 2);
  psd << 1, 0, 0, 0;
  CHECK(classify_definiteness(psd) == DefinitenessClass::PositiveSemidefinite);
}

TEST_CASE("classify_definiteness: invariant under symmetric permutation") {
  std::mt19937 rng(23);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd ps(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        ps(i, j) = sym(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    CHECK(classify_definiteness(ps) == classify_definiteness(sym));
  }
}

TEST_CASE("cross_check: ramp2h full report") {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  CrossCheckReport rep = cross_check(p, x);
  CHECK(rep.pass);
  CHECK(rep.dev_kkt_projection <= 1e-9);
  CHECK(rep.dev_kkt_fd <= 1e-4);
  CHECK(rep.symmetry <= 1e-8);
  CHECK(rep.dclass == DefinitenessClass::NegativeSemidefinite);
  CHECK(rep.nested_evaluated);
  CHECK(rep.nested_gap <= 1e-6);
  CHECK(rep.prop1.guarantee == Guarantee::SymmetryNSD);
}

TEST_CASE("cross_check: single-node agreement is tight") {
  Problem p = assemble_problem(builtin_scenario("single-node-linear"));
  Eigen::VectorXd x(1);
  x << 2.0;
  CrossCheckReport rep = cross_check(p, x);
  CHECK(rep.pass);
  CHECK(std::abs(rep.kkt.m(0, 0) - rep.fd.m(0, 0)) <= 1e-8);
  CHECK(rep.nested_gap <= 1e-6);
}

TEST_CASE("cross_check: seeded random convex scenarios stay consistent") {
  int passed = 0;
  for (unsigned seed = 1; seed <= 12 && passed < 4; ++seed) {
    Scenario s = testgen::random_convex_scenario(seed);
    Problem p = assemble_problem(s);
    Eigen::VectorXd x = testgen::random_injection(p, seed);
    CrossCheckOptions opts;
    opts.evaluate_nested = false;  // index sets here may exceed two entries
    CrossCheckReport rep;
    try {
      rep = cross_check(p, x, opts);
    } catch (const NonsmoothPointError&) {
      continue;
    }
    if (rep.prop1.guarantee == Guarantee::None) continue;
    CHECK(rep.dev_kkt_projection <= 1e-9);
    CHECK(rep.dev_kkt_fd <= 1e-4);
    CHECK(rep.symmetry <= 1e-8);
    CHECK(rep.dclass != DefinitenessClass::Indefinite);
    ++passed;
  }
  CHECK(passed >= 3);
}
