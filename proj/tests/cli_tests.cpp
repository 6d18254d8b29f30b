#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "lmpsens/scenario.hpp"
#include "support/fixtures.hpp"

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = "/tmp/lmpsens_cli_out.txt";
  const std::string cmd =
      std::string(LMPSENS_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WEXITSTATUS(rc), buf.str()};
}

std::string write_scenario(const lmpsens::Scenario& s, const std::string& name) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << lmpsens::serialize_scenario(s);
  return path;
}

}  // namespace

TEST_CASE("cli solve: ramp2h prices at the worked point") {
  auto r = run_cli("solve --builtin ramp2h --x 0.5,0.25");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("8.875000") != std::string::npos);
  CHECK(r.output.find("13.125000") != std::string::npos);
  CHECK(r.output.find("ramp:gprime") != std::string::npos);
}

TEST_CASE("cli solve: single-node clearing price") {
  auto r = run_cli("solve --builtin single-node-linear --x 0");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("2.000000") != std::string::npos);
}

TEST_CASE("cli solve: bad inputs exit 1") {
  CHECK(run_cli("solve --builtin nosuch").exit_code == 1);
  CHECK(run_cli("solve --scenario /tmp/does-not-exist.json").exit_code == 1);
  CHECK(run_cli("solve --builtin ramp2h --x 1").exit_code == 1);  // wrong length
}

TEST_CASE("cli solve: infeasible market exits 2") {
  lmpsens::Scenario s = lmpsens::builtin_scenario("single-node-linear");
  s.units[1].p_max = {5.0};
  const std::string path = write_scenario(s, "short.json");
  auto r = run_cli("solve --scenario " + path + " --x 0");
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli sense: csv matrix matches the worked example") {
  auto r = run_cli("sense --builtin ramp2h --x 0.5,0.25 --format csv");
  CHECK(r.exit_code == 0);
  std::stringstream ss(r.output);
  std::string header;
  std::getline(ss, header);
  CHECK(header == ",n1@1,n1@2");
  double m[2][2];
  for (int i = 0; i < 2; ++i) {
    std::string line, cell;
    std::getline(ss, line);
    std::stringstream ls(line);
    std::getline(ls, cell, ',');  // row label
    for (int j = 0; j < 2; ++j) {
      std::getline(ls, cell, ',');
      m[i][j] = std::stod(cell);
    }
  }
  CHECK(m[0][0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(m[0][1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(m[1][0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(m[1][1] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("cli sense: single-node slope") {
  auto r = run_cli("sense --builtin single-node-linear --x 2 --format csv");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("-0.1") != std::string::npos);
}

TEST_CASE("cli sense: machine output is byte-identical across runs") {
  auto a = run_cli("sense --builtin ramp2h --x 0.5,0.25 --format csv");
  auto b = run_cli("sense --builtin ramp2h --x 0.5,0.25 --format csv");
  CHECK(a.output == b.output);
  auto ja = run_cli("verify --builtin single-node-linear --x 2 --format json");
  auto jb = run_cli("verify --builtin single-node-linear --x 2 --format json");
  CHECK(ja.output == jb.output);
}

TEST_CASE("cli sense: finite differences across a kink exit 3") {
  const std::string path = write_scenario(fixtures::marginal_firm(), "marginal.json");
  auto r = run_cli("sense --scenario " + path + " --x 9 --routes fd");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("nonsmooth") != std::string::npos);
}

TEST_CASE("cli check: guarantees and their absence") {
  CHECK(run_cli("check --builtin ramp2h --x 0.5,0.25").exit_code == 0);
  const std::string path = write_scenario(fixtures::marginal_firm(), "marginal.json");
  auto r = run_cli("check --scenario " + path + " --x 9");
  CHECK(r.exit_code == 4);
  CHECK(r.output.find("none") != std::string::npos);
}

TEST_CASE("cli check: coupled hour partition exits 5") {
  const std::string path =
      write_scenario(fixtures::prop2_coupled_firm(), "coupled.json");
  auto r = run_cli("check --scenario " + path + " --x 3,0 --prop2 n2@2");
  CHECK(r.exit_code == 5);
}

TEST_CASE("cli check: valid hour partition passes") {
  const std::string path =
      write_scenario(fixtures::prop2_capped_firm(), "capped.json");
  auto r = run_cli("check --scenario " + path + " --x 1,0 --prop2 n2@2 --format json");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"proposition\": 2") != std::string::npos);
}

TEST_CASE("cli verify: fixtures pass end to end") {
  CHECK(run_cli("verify --builtin ramp2h --x 0.5,0.25").exit_code == 0);
  CHECK(run_cli("verify --builtin dc3 --seed 7").exit_code == 0);
}

TEST_CASE("cli verify: a coarse finite-difference step breaches tolerance") {
  // On the lossy network the prices are genuinely nonlinear in x, so the
  // h = 0.1 central difference carries a discretization error around 4e-7
  // against 1e-10 at the default step; a 1e-8 agreement bound resolves it.
  const std::string path = write_scenario(fixtures::lossy_pair(), "lossy.json");
  auto fine = run_cli("verify --scenario " + path + " --x 2 --tol-fd 1e-8");
  CHECK(fine.exit_code == 0);
  auto coarse =
      run_cli("verify --scenario " + path + " --x 2 --tol-fd 1e-8 --fd-step 1e-1");
  CHECK(coarse.exit_code == 6);
  CHECK(coarse.output.find("finite-difference") != std::string::npos);
}
