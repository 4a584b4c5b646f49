// Microbenchmarks for the synthesis and runtime hot paths:
//   - monitor DFA compilation
//   - explicit game construction + backward-induction solving
//   - demand-driven shield synthesis (the per-step recompute path)
//   - filter throughput on a live shield
//   - proximity clustering

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "dynashield/dynamic_manager.hpp"
#include "dynashield/harness.hpp"
#include "dynashield/ltl.hpp"
#include "dynashield/monitor.hpp"
#include "dynashield/safety_game.hpp"

using namespace dynashield;

namespace {

const GridMap& arena() {
  static const GridMap m(7, 7, {{{3, 3}}}, {{0, 0}, {6, 6}, {0, 6}, {6, 0}},
                         {{6, 6}, {0, 0}, {6, 0}, {0, 6}});
  return m;
}

const PropositionAlphabet& sigma() {
  static const PropositionAlphabet s({"collision"});
  return s;
}

std::shared_ptr<const Dfa> monitor() {
  static const auto d =
      std::make_shared<const Dfa>(to_monitor_dfa(parse_ltl("G !collision"), sigma()));
  return d;
}

JointState pair_state(Cell a, Cell b) {
  JointState s;
  AgentState x, y;
  x.cell = a;
  y.cell = b;
  s.agents = {x, y};
  return s;
}

void BM_MonitorDfa(benchmark::State& state) {
  const LtlFormula f = parse_ltl("G (!a | X !b) & G (c -> X c)");
  const PropositionAlphabet alphabet({"a", "b", "c"});
  for (auto _ : state) benchmark::DoNotOptimize(to_monitor_dfa(f, alphabet));
}
BENCHMARK(BM_MonitorDfa);

void BM_ExplicitGame(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Abstraction abs{&arena()};
  const ExactGridModel model(arena(), abs);
  const JointState s = pair_state({2, 3}, {4, 3});
  const std::vector<int> ids{0, 1};
  const AbstractLabel root = abs.label_of(s, ids);
  std::size_t states = 0;
  for (auto _ : state) {
    auto unrolling = std::make_shared<const EnvUnrolling>(
        unroll(model, root, k, JointActionSpace{kGridActionCount, 2}));
    const SafetyGame g = build_game(unrolling, monitor(), sigma());
    benchmark::DoNotOptimize(winning_region(g));
    states = g.state_count();
  }
  state.counters["game_states"] = static_cast<double>(states);
}
BENCHMARK(BM_ExplicitGame)->Arg(2)->Arg(3);

void BM_LazySynthesis(benchmark::State& state) {
  const int group = static_cast<int>(state.range(0));
  const Abstraction abs{&arena()};
  const ExactGridModel model(arena(), abs);
  JointState s;
  const Cell cells[4] = {{1, 3}, {5, 3}, {3, 1}, {3, 5}};
  std::vector<int> ids;
  for (int i = 0; i < group; ++i) {
    AgentState a;
    a.cell = cells[i];
    s.agents.push_back(a);
    ids.push_back(i);
  }
  const AbstractLabel root = abs.label_of(s, ids);
  const SynthesisOptions opts{3, 4, false};
  for (auto _ : state) {
    auto core = make_lazy_core(model, *monitor(), sigma(), root,
                               JointActionSpace{kGridActionCount, group}, opts);
    benchmark::DoNotOptimize(core->node_winning(0));
  }
}
BENCHMARK(BM_LazySynthesis)->Arg(2)->Arg(4);

void BM_ShieldFilter(benchmark::State& state) {
  const Abstraction abs{&arena()};
  const ExactGridModel model(arena(), abs);
  ShieldFactory factory(model, monitor(), sigma(), abs, kGridActionCount,
                        SynthesisOptions{3, 4, false});
  const JointState s = pair_state({2, 3}, {4, 3});
  Shield shield = factory.recompute_shield({0, 1}, s);
  const std::vector<int> ids{0, 1};
  const AbstractLabel label = abs.label_of(s, ids);
  JointAction ja;
  ja.size = 2;
  ja[0] = Action::kRight;
  ja[1] = Action::kLeft;
  for (auto _ : state) {
    Shield copy = shield;
    benchmark::DoNotOptimize(copy.filter(label, ja));
  }
}
BENCHMARK(BM_ShieldFilter);

void BM_ClusterAgents(benchmark::State& state) {
  const Abstraction abs{&arena()};
  std::mt19937 rng(5);
  JointState s;
  for (int i = 0; i < 4; ++i) {
    AgentState a;
    a.cell = {std::uniform_int_distribution<int>(0, 6)(rng),
              std::uniform_int_distribution<int>(0, 6)(rng)};
    s.agents.push_back(a);
  }
  const std::vector<Action> proposals(4, Action::kStay);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_agents(s, proposals, 3, abs));
}
BENCHMARK(BM_ClusterAgents);

}  // namespace

BENCHMARK_MAIN();
