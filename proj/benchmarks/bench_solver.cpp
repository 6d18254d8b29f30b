#include <benchmark/benchmark.h>

#include "lmpsens/crosscheck.hpp"

using namespace lmpsens;

namespace {

// Chain network with one supplier/load pair per node and a firm injection at
// the far end; size scales with (nodes, hours).
Scenario chain_scenario(int nodes, int hours) {
  Scenario s;
  s.hours = hours;
  for (int n = 0; n < nodes; ++n) s.nodes.push_back("n" + std::to_string(n + 1));
  for (int n = 0; n + 1 < nodes; ++n)
    s.lines.push_back({s.nodes[static_cast<size_t>(n)],
                       s.nodes[static_cast<size_t>(n + 1)], 10.0, 500.0,
                       std::nullopt});
  s.reference_node = "n1";
  s.firm_of_interest = "g";

  for (int n = 0; n < nodes; ++n) {
    Unit d;
    d.id = "d" + std::to_string(n + 1);
    d.node = s.nodes[static_cast<size_t>(n)];
    d.kind = UnitKind::Load;
    d.firm = "consumers";
    d.p_min = {0.0};
    d.p_max = {40.0};
    BidCurve db;
    db.orientation = BidOrientation::Demand;
    db.segments = {{0.0, 30.0 + n, -0.5, {}}};
    d.bid = db;
    s.units.push_back(d);

    Unit g;
    g.id = "s" + std::to_string(n + 1);
    g.node = s.nodes[static_cast<size_t>(n)];
    g.kind = UnitKind::Generator;
    g.firm = "supplier";
    g.p_min = {0.0};
    g.p_max = {50.0};
    BidCurve gb;
    gb.orientation = BidOrientation::Supply;
    gb.segments = {{0.0, 4.0 + 0.5 * n, 0.1, {}}};
    g.bid = gb;
    g.ramp_up = 15.0;
    s.units.push_back(g);
  }
  Unit firm;
  firm.id = "g";
  firm.node = s.nodes.back();
  firm.kind = UnitKind::FirmInjection;
  firm.firm = "g";
  firm.p_min = {0.0};
  firm.p_max = {10.0};
  s.units.push_back(firm);
  return s;
}

Eigen::VectorXd mid_injection(const Problem& p) {
  return Eigen::VectorXd::Constant(static_cast<int>(p.firm_index.size()), 1.0);
}

}  // namespace

static void BM_Assemble(benchmark::State& state) {
  Scenario s = chain_scenario(static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_problem(s));
}
BENCHMARK(BM_Assemble)->Args({3, 4})->Args({6, 12})->Args({8, 24});  // assembly only

static void BM_SolveSubproblem(benchmark::State& state) {
  Problem p = assemble_problem(chain_scenario(static_cast<int>(state.range(0)),
                                              static_cast<int>(state.range(1))));
  Eigen::VectorXd x = mid_injection(p);
  for (auto _ : state) benchmark::DoNotOptimize(solve_subproblem(p, x));
}
BENCHMARK(BM_SolveSubproblem)->Args({1, 2})->Args({2, 4})->Args({3, 8});  // assembly only

static void BM_SolveRamp2h(benchmark::State& state) {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  for (auto _ : state) benchmark::DoNotOptimize(solve_subproblem(p, x));
}
BENCHMARK(BM_SolveRamp2h);

static void BM_ResponseKkt(benchmark::State& state) {
  Problem p = assemble_problem(chain_scenario(static_cast<int>(state.range(0)),
                                              static_cast<int>(state.range(1))));
  Eigen::VectorXd x = mid_injection(p);
  auto sub = solve_subproblem(p, x);
  for (auto _ : state)
    benchmark::DoNotOptimize(response_matrix_kkt(sub.reduced, sub.solution));
}
BENCHMARK(BM_ResponseKkt)->Args({2, 4})->Args({3, 8});

static void BM_ResponseFd(benchmark::State& state) {
  Problem p = assemble_problem(chain_scenario(static_cast<int>(state.range(0)),
                                              static_cast<int>(state.range(1))));
  Eigen::VectorXd x = mid_injection(p);
  for (auto _ : state) benchmark::DoNotOptimize(response_matrix_fd(p, x));
}
BENCHMARK(BM_ResponseFd)->Args({2, 4});

static void BM_CheckProp1(benchmark::State& state) {
  Problem p = assemble_problem(builtin_scenario("ramp2h"));
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  for (auto _ : state) benchmark::DoNotOptimize(check_prop1(p, x));
}
BENCHMARK(BM_CheckProp1);

BENCHMARK_MAIN();
