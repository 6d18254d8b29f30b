// Acceptance suite: prints one PASS/FAIL line per criterion and exits with
// the number of failures.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lmpsens/crosscheck.hpp"
#include "lmpsens/report_io.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "support/random_scenario.hpp"

using namespace lmpsens;

namespace {

int g_failures = 0;

void report(int num, bool ok, const std::string& what) {
  std::printf("%s  criterion %2d: %s\n", ok ? "PASS" : "FAIL", num, what.c_str());
  if (!ok) ++g_failures;
}

struct Case {
  std::string name;
  Problem problem;
  Eigen::VectorXd x;
  PropositionReport prop;
  ResponseMatrix kkt;
  Eigen::VectorXd lmps;
};

double scale_of(const Eigen::MatrixXd& m) {
  return std::max(1.0, m.lpNorm<Eigen::Infinity>());
}

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string out = "/tmp/lmpsens_acceptance_cli.txt";
  const int rc =
      std::system((std::string(LMPSENS_CLI_PATH) + " " + args + " > " + out +
                   " 2>&1").c_str());
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WEXITSTATUS(rc), buf.str()};
}

std::string write_scenario(const Scenario& s, const std::string& name) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << serialize_scenario(s);
  return path;
}

}  // namespace

int main() {
  std::vector<Case> cases;  // every scenario passing the checker

  // Named fixtures at their pinned evaluation points.
  {
    Problem p = assemble_problem(builtin_scenario("ramp2h"));
    Eigen::VectorXd x(2);
    x << 0.5, 0.25;
    Case c{"ramp2h", p, x, {}, {}, {}};
    cases.push_back(c);
  }
  {
    Problem p = assemble_problem(builtin_scenario("single-node-linear"));
    Eigen::VectorXd x(1);
    x << 2.0;
    cases.push_back({"single-node-linear", p, x, {}, {}, {}});
  }
  {
    Problem p = assemble_problem(builtin_scenario("dc3"));
    Eigen::VectorXd x(1);
    x << 1.0;
    cases.push_back({"dc3", p, x, {}, {}, {}});
  }

  // ---- criterion 1: worked two-hour example reproduction -------------------
  bool c1 = true;
  Eigen::MatrixXd golden(2, 2);
  golden << -0.5, 0.5, 0.5, -0.5;
  {
    Case& rc = cases[0];
    auto sub = solve_subproblem(rc.problem, rc.x);
    c1 &= sub.solution.status == SolveStatus::Optimal;
    Eigen::VectorXd lmps = firm_lmps(sub.reduced, sub.solution);
    c1 &= std::abs(lmps[0] - 8.875) <= 1e-8;
    c1 &= std::abs(lmps[1] - 13.125) <= 1e-8;
    auto m = response_matrix_kkt(sub.reduced, sub.solution);
    c1 &= (m.m - golden).lpNorm<Eigen::Infinity>() <= 1e-8;
    EigenPairs ep = eigen_decompose(m.m);
    c1 &= std::abs(ep.values[0] - 0.0) <= 1e-8;
    c1 &= std::abs(ep.values[1] + 1.0) <= 1e-8;
    Eigen::Vector2d null_dir(1, 1), swing_dir(1, -1);
    null_dir.normalize();
    swing_dir.normalize();
    c1 &= std::abs(std::abs(ep.vectors.col(0).dot(null_dir)) - 1.0) <= 1e-8;
    c1 &= std::abs(std::abs(ep.vectors.col(1).dot(swing_dir)) - 1.0) <= 1e-8;
  }
  report(1, c1, "two-hour golden fixture: prices, response matrix, spectrum");

  // ---- criterion 2: cross-hour symmetry of the example ----------------------
  bool c2 = true;
  {
    auto sub = solve_subproblem(cases[0].problem, cases[0].x);
    auto m = response_matrix_kkt(sub.reduced, sub.solution);
    c2 = std::abs(m.m(0, 1) - m.m(1, 0)) <= 1e-8;
  }
  report(2, c2, "cross-hour price response symmetry at the worked point");

  // ---- criterion 3: three-route agreement on fixtures + 100 random ---------
  bool c3 = true;
  std::string c3_note;
  {
    unsigned seed = 0;
    int random_kept = 0;
    int attempts = 0;
    while (random_kept < 100 && attempts < 500) {
      ++seed;
      ++attempts;
      Scenario s = testgen::random_convex_scenario(seed);
      if (!validate_scenario(s).empty()) continue;
      Problem p = assemble_problem(s);
      Eigen::VectorXd x = testgen::random_injection(p, seed);
      try {
        PropositionReport rep = check_prop1(p, x);
        if (rep.guarantee == Guarantee::None) continue;
        Case c{"random-" + std::to_string(seed), p, x, rep, {}, {}};
        cases.push_back(c);
        ++random_kept;
      } catch (const std::exception&) {
        continue;
      }
    }
    if (random_kept < 100) {
      c3 = false;
      c3_note = " (only " + std::to_string(random_kept) + " passing scenarios)";
    }

    for (auto& c : cases) {
      try {
        if (c.prop.guarantee == Guarantee::None) c.prop = check_prop1(c.problem, c.x);
        auto sub = solve_subproblem(c.problem, c.x);
        c.lmps = firm_lmps(sub.reduced, sub.solution);
        c.kkt = response_matrix_kkt(sub.reduced, sub.solution);
        auto proj = response_matrix_projection(sub.reduced, sub.solution);
        auto fd = response_matrix_fd(c.problem, c.x);
        if ((c.kkt.m - proj.matrix.m).lpNorm<Eigen::Infinity>() > 1e-9) {
          c3 = false;
          c3_note += " [" + c.name + ": kkt/projection]";
        }
        if ((c.kkt.m - fd.m).lpNorm<Eigen::Infinity>() > 1e-4) {
          c3 = false;
          c3_note += " [" + c.name + ": kkt/fd]";
        }
        if (proj.split_deviation > 1e-9) {
          c3 = false;
          c3_note += " [" + c.name + ": split]";
        }
      } catch (const std::exception& e) {
        c3 = false;
        c3_note += " [" + c.name + ": " + e.what() + "]";
      }
    }
  }
  report(3, c3,
         "three-route agreement on fixtures and 100 seeded convex scenarios" +
             c3_note);

  // ---- criterion 4: symmetry and sign definiteness where guaranteed --------
  bool c4 = true;
  std::string c4_note;
  {
    for (const auto& c : cases) {
      if (c.prop.guarantee == Guarantee::None || c.kkt.m.size() == 0) continue;
      if (symmetry_defect(c.kkt.m) > 1e-8) {
        c4 = false;
        c4_note += " [" + c.name + ": symmetry]";
      }
      EigenPairs ep = eigen_decompose(c.kkt.m);
      if (ep.values.maxCoeff() > 1e-8) {
        c4 = false;
        c4_note += " [" + c.name + ": not NSD]";
      }
      if (c.prop.convexity == ConvexityVerdict::Strict &&
          ep.values.maxCoeff() > -1e-8 * scale_of(c.kkt.m)) {
        c4 = false;
        c4_note += " [" + c.name + ": strict but not ND]";
      }
    }
  }
  report(4, c4, "symmetry defect and NSD/ND spectrum on passing scenarios" + c4_note);

  // ---- criterion 5: envelope gradient identity ------------------------------
  bool c5 = true;
  std::string c5_note;
  {
    for (const auto& c : cases) {
      if (c.prop.guarantee == Guarantee::None || c.lmps.size() == 0) continue;
      try {
        Eigen::VectorXd g = value_gradient_fd(c.problem, c.x);
        if ((g - c.lmps).lpNorm<Eigen::Infinity>() > 1e-5) {
          c5 = false;
          c5_note += " [" + c.name + "]";
        }
      } catch (const std::exception& e) {
        c5 = false;
        c5_note += " [" + c.name + ": " + e.what() + "]";
      }
    }
  }
  report(5, c5, "value-function gradient equals firm-node prices" + c5_note);

  // ---- criterion 6: nested equivalence --------------------------------------
  bool c6 = true;
  {
    for (int i = 0; i < 2; ++i) {
      CrossCheckOptions opts;
      CrossCheckReport rep = cross_check(cases[static_cast<size_t>(i)].problem,
                                         cases[static_cast<size_t>(i)].x, opts);
      c6 &= rep.nested_evaluated && rep.nested_gap <= 1e-6;
    }
  }
  report(6, c6, "full solve equals the outer search over firm injections");

  // ---- criterion 7: active-set solver vs enumeration oracle ----------------
  bool c7 = true;
  std::string c7_note;
  {
    std::vector<std::pair<std::string, Problem>> probes;
    {
      Problem p = assemble_problem(builtin_scenario("ramp2h"));
      Eigen::VectorXd x(2);
      x << 0.5, 0.25;
      probes.emplace_back("ramp2h-sub", reduce_problem(p, x).problem);
      x << 0.0, 0.0;
      probes.emplace_back("ramp2h-sub0", reduce_problem(p, x).problem);
    }
    {
      Problem p = assemble_problem(builtin_scenario("single-node-linear"));
      Eigen::VectorXd x(1);
      x << 2.0;
      probes.emplace_back("snl-sub", reduce_problem(p, x).problem);
      probes.emplace_back("snl-full", p);
    }
    {
      Problem p = assemble_problem(builtin_scenario("dc3"));
      Eigen::VectorXd x(1);
      x << 1.0;
      probes.emplace_back("dc3-sub", reduce_problem(p, x).problem);
    }
    {
      Problem p = assemble_problem(fixtures::marginal_firm());
      Eigen::VectorXd x(1);
      x << 5.0;
      probes.emplace_back("marginal-sub", reduce_problem(p, x).problem);
    }
    probes.emplace_back("prop2-full",
                        assemble_problem(fixtures::prop2_capped_firm()));

    for (const auto& [name, q] : probes) {
      int ineqs = 0;
      for (const auto& con : q.constraints) ineqs += con.relation == Relation::Le;
      if (ineqs > 12) {
        c7 = false;
        c7_note += " [" + name + ": fixture exceeds 12 inequalities]";
        continue;
      }
      auto ref = oracle::brute_force_solve(q);
      Solution sol = solve(q);
      if (!ref.found || sol.status != SolveStatus::Optimal ||
          std::abs(sol.objective - ref.objective) > 1e-9 ||
          (sol.point - ref.z).lpNorm<Eigen::Infinity>() > 1e-9 ||
          (sol.multipliers - ref.multipliers).lpNorm<Eigen::Infinity>() > 1e-9) {
        c7 = false;
        c7_note += " [" + name + "]";
      }
    }
  }
  report(7, c7, "solver matches the brute-force enumeration oracle" + c7_note);

  // ---- criterion 8: negative controls with designated exit codes -----------
  bool c8 = true;
  std::string c8_note;
  {
    const std::string marginal = write_scenario(fixtures::marginal_firm(),
                                                "acceptance_marginal.json");
    const std::string coupled = write_scenario(fixtures::prop2_coupled_firm(),
                                               "acceptance_coupled.json");
    auto no_guarantee = run_cli("check --scenario " + marginal +
                                " --x 9 --format json");
    if (no_guarantee.exit_code != 4) {
      c8 = false;
      c8_note += " [marginal check exit " + std::to_string(no_guarantee.exit_code) + "]";
    }
    if (no_guarantee.output.find("\"binding_stability\": \"fail\"") ==
        std::string::npos) {
      c8 = false;
      c8_note += " [stability verdict missing]";
    }
    auto nonsmooth = run_cli("sense --scenario " + marginal + " --x 9 --routes fd");
    if (nonsmooth.exit_code != 3) {
      c8 = false;
      c8_note += " [fd sense exit " + std::to_string(nonsmooth.exit_code) + "]";
    }
    auto partition =
        run_cli("check --scenario " + coupled + " --x 3,0 --prop2 n2@2");
    if (partition.exit_code != 5) {
      c8 = false;
      c8_note += " [partition exit " + std::to_string(partition.exit_code) + "]";
    }
  }
  report(8, c8, "negative controls produce their designated exit codes" + c8_note);

  // ---- criterion 9: constant response matrix in the DC region --------------
  bool c9 = true;
  {
    Problem p = assemble_problem(builtin_scenario("dc3"));
    Eigen::VectorXd xa(1), xb(1);
    xa << 1.0;
    xb << 3.0;
    try {
      c9 &= check_prop1(p, xa).guarantee != Guarantee::None;
      auto sa = solve_subproblem(p, xa);
      auto sb = solve_subproblem(p, xb);
      auto ma = response_matrix_kkt(sa.reduced, sa.solution);
      auto mb = response_matrix_kkt(sb.reduced, sb.solution);
      c9 &= (ma.m - mb.m).lpNorm<Eigen::Infinity>() <= 1e-8;
    } catch (const std::exception&) {
      c9 = false;
    }
  }
  report(9, c9, "all-linear scenario keeps a constant response matrix");

  // ---- criterion 10: markup sign --------------------------------------------
  bool c10 = true;
  std::string c10_note;
  {
    std::mt19937 rng(314159u);
    std::normal_distribution<double> gauss;
    for (const auto& c : cases) {
      if (c.prop.guarantee == Guarantee::None || c.kkt.m.size() == 0) continue;
      for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd x(c.kkt.m.rows());
        for (int i = 0; i < x.size(); ++i) x[i] = gauss(rng);
        if (markup(c.kkt, x) < -1e-10) {
          c10 = false;
          c10_note += " [" + c.name + "]";
          break;
        }
      }
    }
    auto sub = solve_subproblem(cases[0].problem, cases[0].x);
    auto m = response_matrix_kkt(sub.reduced, sub.solution);
    if (std::abs(markup(m, cases[0].x) - 0.03125) > 1e-8) {
      c10 = false;
      c10_note += " [worked markup value]";
    }
  }
  report(10, c10, "markup nonneg. on 1000 draws per scenario; worked value" + c10_note);

  if (g_failures == 0)
    std::printf("acceptance: all 10 criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return g_failures;
}
