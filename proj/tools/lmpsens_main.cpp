// Command-line front end: solve, sense, check, verify.
//
// Exit codes: 0 ok, 1 input error, 2 infeasible, 3 nonsmooth point,
// 4 no guarantee, 5 invalid hour partition, 6 tolerance breach.
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lmpsens/crosscheck.hpp"
#include "lmpsens/report_io.hpp"
#include "lmpsens/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNonsmooth = 3;
constexpr int kExitNoGuarantee = 4;
constexpr int kExitBadPartition = 5;
constexpr int kExitToleranceBreach = 6;

struct CommonArgs {
  std::string builtin;
  std::string scenario_path;
  std::string x_text;
  std::string format = "text";
  std::string out_path;
  double tol = 1e-8;
  double act_tol = 1e-7;
  double fd_step = 1e-5;
  double probe_radius = -1.0;
  int probe_trials = 4;
  unsigned seed = 7;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  auto* builtin = cmd->add_option("--builtin", a.builtin,
                                  "builtin scenario: ramp2h, single-node-linear, dc3");
  auto* file = cmd->add_option("--scenario", a.scenario_path, "scenario JSON file");
  builtin->excludes(file);
  cmd->add_option("--x", a.x_text,
                  "firm injection vector, comma separated (default zeros)");
  cmd->add_option("--format", a.format, "output format: text, json, csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));
  cmd->add_option("--out", a.out_path, "write the report to a file");
  cmd->add_option("--tol", a.tol, "KKT certification tolerance");
  cmd->add_option("--act-tol", a.act_tol, "constraint activation tolerance");
  cmd->add_option("--fd-step", a.fd_step, "finite-difference step scale");
  cmd->add_option("--probe-radius", a.probe_radius,
                  "stability probe radius (negative: auto)");
  cmd->add_option("--probe-trials", a.probe_trials,
                  "random stability probes beyond the axis points");
  cmd->add_option("--seed", a.seed, "seed for randomized probes");
}

struct Loaded {
  lmpsens::Scenario scenario;
  lmpsens::Problem problem;
  Eigen::VectorXd x;
};

Loaded load(const CommonArgs& a) {
  Loaded l;
  if (!a.builtin.empty()) {
    l.scenario = lmpsens::builtin_scenario(a.builtin);
  } else if (!a.scenario_path.empty()) {
    std::ifstream in(a.scenario_path);
    if (!in)
      throw lmpsens::ScenarioError(lmpsens::ScenarioError::Kind::Syntax,
                                   a.scenario_path,
                                   "cannot open scenario file '" + a.scenario_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    l.scenario = lmpsens::parse_scenario(buf.str());
  } else {
    throw lmpsens::ScenarioError(lmpsens::ScenarioError::Kind::Semantic, "",
                                 "pass exactly one of --builtin or --scenario");
  }

  auto violations = lmpsens::validate_scenario(l.scenario);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "scenario fails validation:";
    for (const auto& v : violations)
      msg << "\n  [" << v.rule << "] " << v.message;
    throw lmpsens::ScenarioError(lmpsens::ScenarioError::Kind::Semantic,
                                 violations.front().entity, msg.str());
  }
  l.problem = lmpsens::assemble_problem(l.scenario);

  const int k = static_cast<int>(l.problem.firm_index.size());
  l.x = Eigen::VectorXd::Zero(k);
  if (!a.x_text.empty()) {
    std::vector<double> vals;
    std::stringstream ss(a.x_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        vals.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw lmpsens::ScenarioError(lmpsens::ScenarioError::Kind::Semantic, "--x",
                                     "cannot parse injection value '" + item + "'");
      }
    }
    if (static_cast<int>(vals.size()) != k) {
      throw lmpsens::ScenarioError(
          lmpsens::ScenarioError::Kind::Semantic, "--x",
          "--x has " + std::to_string(vals.size()) + " entries but the firm " +
              "index set has " + std::to_string(k));
    }
    for (int i = 0; i < k; ++i) l.x[i] = vals[static_cast<size_t>(i)];
  }
  return l;
}

void emit(const CommonArgs& a, const std::string& text) {
  if (a.out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
  } else {
    std::ofstream out(a.out_path);
    out << text;
  }
}

lmpsens::SolveOptions solve_options(const CommonArgs& a) {
  lmpsens::SolveOptions o;
  o.tol = a.tol;
  o.act_tol = a.act_tol;
  return o;
}

lmpsens::SensitivityOptions sens_options(const CommonArgs& a) {
  lmpsens::SensitivityOptions o;
  o.solve = solve_options(a);
  o.act_tol = a.act_tol;
  o.fd_step_scale = a.fd_step;
  return o;
}

lmpsens::PropOptions prop_options(const CommonArgs& a) {
  lmpsens::PropOptions o;
  o.solve = solve_options(a);
  o.act_tol = a.act_tol;
  o.probe_radius = a.probe_radius;
  o.probe_random_trials = a.probe_trials;
  o.probe_seed = a.seed;
  return o;
}

int cmd_solve(const CommonArgs& a) {
  Loaded l = load(a);
  auto sub = lmpsens::solve_subproblem(l.problem, l.x, solve_options(a));
  if (a.format == "json") {
    auto j = lmpsens::solution_report(sub.reduced.problem, sub.solution);
    nlohmann::ordered_json inj;
    for (size_t i = 0; i < sub.reduced.pinned_index.size(); ++i)
      inj[sub.reduced.pinned_index[i].key] = l.x[static_cast<int>(i)];
    j["injection"] = inj;
    j["welfare"] = sub.welfare;
    emit(a, j.dump(2));
  } else {
    std::ostringstream out;
    out << "injection:";
    for (size_t i = 0; i < sub.reduced.pinned_index.size(); ++i)
      out << " " << sub.reduced.pinned_index[i].key << "="
          << l.x[static_cast<int>(i)];
    out << "\n" << lmpsens::solution_table(sub.reduced.problem, sub.solution);
    emit(a, out.str());
  }
  return sub.solution.status == lmpsens::SolveStatus::Optimal ? kExitOk
                                                              : kExitInfeasible;
}

int cmd_sense(const CommonArgs& a, const std::string& routes_text) {
  Loaded l = load(a);
  std::set<std::string> routes;
  std::stringstream ss(routes_text);
  std::string item;
  while (std::getline(ss, item, ',')) routes.insert(item);

  auto sub = lmpsens::solve_subproblem(l.problem, l.x, solve_options(a));
  if (sub.solution.status != lmpsens::SolveStatus::Optimal) return kExitInfeasible;

  std::optional<lmpsens::ResponseMatrix> kkt, fd;
  std::optional<lmpsens::ProjectionSplit> proj;
  if (routes.count("kkt"))
    kkt = lmpsens::response_matrix_kkt(sub.reduced, sub.solution, sens_options(a));
  if (routes.count("projection"))
    proj = lmpsens::response_matrix_projection(sub.reduced, sub.solution,
                                               sens_options(a));
  if (routes.count("fd"))
    fd = lmpsens::response_matrix_fd(l.problem, l.x, sens_options(a));
  const lmpsens::ResponseMatrix& primary =
      kkt ? *kkt : (proj ? proj->matrix : *fd);

  if (a.format == "csv") {
    emit(a, lmpsens::response_csv(primary));
  } else if (a.format == "json") {
    nlohmann::ordered_json j;
    if (kkt) j["kkt"] = lmpsens::response_report(*kkt);
    if (proj) {
      j["projection"] = lmpsens::response_report(proj->matrix);
      j["split_deviation"] = proj->split_deviation;
    }
    if (fd) j["finite_difference"] = lmpsens::response_report(*fd);
    j["symmetry_defect"] = lmpsens::symmetry_defect(primary.m);
    auto ep = lmpsens::eigen_decompose(primary.m);
    nlohmann::ordered_json eig = nlohmann::ordered_json::array();
    for (int i = 0; i < ep.values.size(); ++i) eig.push_back(ep.values[i]);
    j["eigenvalues"] = eig;
    j["definiteness"] = to_string(lmpsens::classify_definiteness(primary.m));
    emit(a, j.dump(2));
  } else {
    std::ostringstream out;
    if (kkt) out << lmpsens::response_table(*kkt);
    if (proj) out << lmpsens::response_table(proj->matrix);
    if (fd) out << lmpsens::response_table(*fd);
    out << "symmetry defect: " << lmpsens::symmetry_defect(primary.m) << "\n";
    out << "definiteness: "
        << to_string(lmpsens::classify_definiteness(primary.m)) << "\n";
    emit(a, out.str());
  }
  return kExitOk;
}

int cmd_check(const CommonArgs& a, const std::string& prop2_text) {
  Loaded l = load(a);
  lmpsens::PropositionReport rep;
  if (prop2_text.empty()) {
    rep = lmpsens::check_prop1(l.problem, l.x, prop_options(a));
  } else {
    // --prop2 lists the freed (optimized) firm entries; the rest stay pinned.
    std::set<std::string> freed;
    std::stringstream ss(prop2_text);
    std::string item;
    while (std::getline(ss, item, ',')) freed.insert(item);
    lmpsens::HourPartition part;
    std::vector<double> pin_vals;
    for (size_t i = 0; i < l.problem.firm_index.size(); ++i) {
      const auto& fe = l.problem.firm_index[i];
      if (freed.count(fe.key)) {
        freed.erase(fe.key);
        continue;
      }
      part.pinned_positions.push_back(static_cast<int>(i));
      pin_vals.push_back(l.x[static_cast<int>(i)]);
    }
    if (!freed.empty())
      throw lmpsens::ScenarioError(
          lmpsens::ScenarioError::Kind::Semantic, "--prop2",
          "--prop2 names '" + *freed.begin() + "' which is not a firm index entry");
    Eigen::VectorXd xp(static_cast<int>(pin_vals.size()));
    for (size_t i = 0; i < pin_vals.size(); ++i) xp[static_cast<int>(i)] = pin_vals[i];
    rep = lmpsens::check_prop2(l.problem, part, xp, prop_options(a));
  }

  if (a.format == "json")
    emit(a, lmpsens::proposition_report_json(rep).dump(2));
  else
    emit(a, lmpsens::proposition_table(rep));
  return rep.guarantee != lmpsens::Guarantee::None ? kExitOk : kExitNoGuarantee;
}

int cmd_verify(const CommonArgs& a, double tol_routes, double tol_fd,
               double tol_nested, bool no_nested) {
  Loaded l = load(a);
  lmpsens::CrossCheckOptions opts;
  opts.sens = sens_options(a);
  opts.prop = prop_options(a);
  opts.tol_routes = tol_routes;
  opts.tol_fd = tol_fd;
  opts.tol_nested = tol_nested;
  opts.evaluate_nested = !no_nested;
  auto rep = lmpsens::cross_check(l.problem, l.x, opts);
  if (a.format == "json")
    emit(a, lmpsens::crosscheck_report_json(rep).dump(2));
  else
    emit(a, lmpsens::crosscheck_table(rep));
  return rep.pass ? kExitOk : kExitToleranceBreach;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nodal market clearing, LMP sensitivity, and response-matrix "
               "property checks"};
  app.footer(
      "exit codes: 0 ok, 1 input error, 2 infeasible, 3 nonsmooth point,\n"
      "            4 no guarantee, 5 invalid hour partition, 6 tolerance breach");
  app.require_subcommand(1);

  CommonArgs sa, na, ca, va;
  std::string routes = "kkt,projection,fd";
  std::string prop2;
  double tol_routes = 1e-9, tol_fd = 1e-4, tol_nested = 1e-6;
  bool no_nested = false;

  auto* solve_cmd = app.add_subcommand(
      "solve", "clear the market at a fixed firm injection");
  add_common(solve_cmd, sa);

  auto* sense_cmd = app.add_subcommand(
      "sense", "nodal price response matrix at an injection point");
  add_common(sense_cmd, na);
  sense_cmd->add_option("--routes", routes,
                        "comma list from kkt, projection, fd");

  auto* check_cmd = app.add_subcommand(
      "check", "verify the symmetry / sign-definiteness conditions");
  add_common(check_cmd, ca);
  check_cmd->add_option(
      "--prop2", prop2,
      "hour-subset check: comma list of freed firm entries, e.g. n1@2");

  auto* verify_cmd = app.add_subcommand(
      "verify", "cross-route consistency and property report");
  add_common(verify_cmd, va);
  verify_cmd->add_option("--tol-routes", tol_routes, "kkt vs projection bound");
  verify_cmd->add_option("--tol-fd", tol_fd, "kkt vs finite-difference bound");
  verify_cmd->add_option("--tol-nested", tol_nested, "nested-equivalence bound");
  verify_cmd->add_flag("--no-nested", no_nested, "skip the outer-search check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(sa);
    if (sense_cmd->parsed()) return cmd_sense(na, routes);
    if (check_cmd->parsed()) return cmd_check(ca, prop2);
    if (verify_cmd->parsed())
      return cmd_verify(va, tol_routes, tol_fd, tol_nested, no_nested);
  } catch (const lmpsens::ScenarioError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const lmpsens::PartitionError& e) {
    std::cerr << "partition error: " << e.what() << "\n";
    return kExitBadPartition;
  } catch (const lmpsens::NonsmoothPointError& e) {
    std::cerr << "nonsmooth point: " << e.what() << "\n";
    return kExitNonsmooth;
  } catch (const lmpsens::SingularSystemError& e) {
    std::cerr << "singular reduced system: " << e.what() << "\n";
    return kExitNonsmooth;
  } catch (const lmpsens::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
