#include <random>
#include <set>

#include "doctest.h"
#include "dynashield/dynamic_manager.hpp"
#include "game_helpers.hpp"

using namespace dynashield;
namespace dt = dynashield::testing;

namespace {

JointState state_at(std::initializer_list<Cell> cells) {
  JointState s;
  for (Cell c : cells) {
    AgentState a;
    a.cell = c;
    s.agents.push_back(a);
  }
  return s;
}

struct Rig {
  GridMap map;
  Abstraction abs;
  ExactGridModel model;
  ShieldFactory factory;
  DynamicShieldManager manager;

  Rig(GridMap m, int k, double penalty = -10.0)
      : map(std::move(m)),
        abs{&map},
        model(map, abs),
        factory(model, dt::collision_monitor(), dt::collision_alphabet(), abs, kGridActionCount,
                SynthesisOptions{k, 4, false}),
        manager(factory, penalty) {}
};

GridMap open7(int agents = 2) {
  std::vector<Cell> starts, targets;
  const std::vector<Cell> start_pool{{0, 0}, {6, 6}, {0, 6}, {6, 0}};
  const std::vector<Cell> target_pool{{6, 6}, {0, 0}, {6, 0}, {0, 6}};
  for (int i = 0; i < agents; ++i) {
    starts.push_back(start_pool[static_cast<std::size_t>(i)]);
    targets.push_back(target_pool[static_cast<std::size_t>(i)]);
  }
  return GridMap(7, 7, {}, starts, targets);
}

}  // namespace

TEST_CASE("cluster_agents: distance threshold 2k") {
  const GridMap m = open7();
  const Abstraction abs{&m};
  const int k = 1;
  // Distance 2k+1 = 3: separate groups.
  {
    const JointState s = state_at({{0, 0}, {3, 0}});
    const auto c = cluster_agents(s, {Action::kStay, Action::kStay}, k, abs);
    REQUIRE(c.groups.size() == 2);
    CHECK(c.groups[0] == std::vector<int>{0});
    CHECK(c.groups[1] == std::vector<int>{1});
  }
  // Adjacent agents merge for any k >= 1.
  {
    const JointState s = state_at({{0, 0}, {1, 0}});
    const auto c = cluster_agents(s, {Action::kStay, Action::kStay}, k, abs);
    REQUIRE(c.groups.size() == 1);
    CHECK(c.groups[0] == std::vector<int>{0, 1});
  }
}

TEST_CASE("cluster_agents: union-find closes chains transitively") {
  const GridMap m(11, 1, {}, {{0, 0}, {2, 0}, {4, 0}}, {{10, 0}, {9, 0}, {8, 0}});
  const Abstraction abs{&m};
  // k=1: a-b at 2k, b-c at 2k, a-c at 4k: one group.
  const JointState s = state_at({{0, 0}, {2, 0}, {4, 0}});
  const auto c = cluster_agents(s, {Action::kStay, Action::kStay, Action::kStay}, 1, abs);
  REQUIRE(c.groups.size() == 1);
  CHECK(c.groups[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("cluster_agents: done agents are not clustered") {
  const GridMap m = open7();
  const Abstraction abs{&m};
  JointState s = state_at({{0, 0}, {1, 0}});
  s.agents[1].done = true;
  const auto c = cluster_agents(s, {Action::kStay, Action::kStay}, 2, abs);
  REQUIRE(c.groups.size() == 1);
  CHECK(c.groups[0] == std::vector<int>{0});
}

TEST_CASE("reconcile: reuse only on identical live covered signatures") {
  Rig rig(open7(), 2);
  const JointState s = state_at({{0, 0}, {6, 6}});

  std::map<std::vector<int>, Shield> pool;
  pool.emplace(std::vector<int>{0}, rig.factory.recompute_shield({0}, s));
  pool.emplace(std::vector<int>{1}, rig.factory.recompute_shield({1}, s));

  // Unchanged singleton groups with fresh duration: reuse.
  ClusterAssignment clusters{{{0}, {1}}};
  std::vector<AbstractLabel> labels{rig.abs.label_of(s, clusters.groups[0]),
                                    rig.abs.label_of(s, clusters.groups[1])};
  auto plan = reconcile(pool, clusters, labels);
  REQUIRE(plan.size() == 2);
  CHECK(plan[0].action == PlanAction::kReuse);
  CHECK(plan[1].action == PlanAction::kReuse);

  // A merged pair has no matching signature: recompute.
  ClusterAssignment merged{{{0, 1}}};
  std::vector<AbstractLabel> merged_labels{rig.abs.label_of(s, merged.groups[0])};
  plan = reconcile(pool, merged, merged_labels);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].action == PlanAction::kRecompute);
}

TEST_CASE("reconcile: expired shields recompute") {
  Rig rig(open7(), 1);
  const JointState s = state_at({{0, 0}, {6, 6}});
  Shield sh = rig.factory.recompute_shield({0}, s);
  const AbstractLabel l0 = rig.abs.label_of(s, std::vector<int>{0});
  const FilterResult fr = sh.filter(l0, [] {
    JointAction ja;
    ja.size = 1;
    ja[0] = Action::kStay;
    return ja;
  }());
  sh.advance(l0, fr.corrected);
  REQUIRE(sh.is_expired());

  std::map<std::vector<int>, Shield> pool;
  pool.emplace(std::vector<int>{0}, std::move(sh));
  ClusterAssignment clusters{{{0}}};
  const auto plan = reconcile(pool, clusters, {l0});
  CHECK(plan[0].action == PlanAction::kRecompute);
}

TEST_CASE("recompute_shield: singleton in open space has identity lambda") {
  Rig rig(open7(), 2);
  const JointState s = state_at({{3, 3}, {6, 6}});
  Shield sh = rig.factory.recompute_shield({0}, s);
  const AbstractLabel l = rig.abs.label_of(s, std::vector<int>{0});
  for (int a = 0; a < kGridActionCount; ++a) {
    Shield copy = sh;
    JointAction ja;
    ja.size = 1;
    ja[0] = static_cast<Action>(a);
    CHECK(copy.filter(l, ja).corrected == ja);
  }
}

TEST_CASE("recompute_shield: corridor pair corrects head-on proposals") {
  Rig rig(GridMap(2, 1, {}, {{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}), 1);
  const JointState s = state_at({{0, 0}, {1, 0}});
  Shield sh = rig.factory.recompute_shield({0, 1}, s);
  JointAction ja;
  ja.size = 2;
  ja[0] = Action::kRight;
  ja[1] = Action::kLeft;
  const FilterResult fr = sh.filter(rig.abs.label_of(s, std::vector<int>{0, 1}), ja);
  CHECK(fr.corrected_flags[0]);
  CHECK(fr.corrected_flags[1]);
}

TEST_CASE("recompute_shield: collided group is an unsafe start") {
  Rig rig(open7(), 2);
  const JointState s = state_at({{3, 3}, {3, 3}});
  CHECK_THROWS_AS(rig.factory.recompute_shield({0, 1}, s), UnsafeStartError);
}

TEST_CASE("recompute_shield: oversized group aborts") {
  GridMap m(9, 9, {}, {{0, 0}, {2, 0}, {4, 0}, {6, 0}, {8, 0}},
            {{0, 8}, {2, 8}, {4, 8}, {6, 8}, {8, 8}});
  Rig rig(std::move(m), 2);
  const JointState s = state_at({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}});
  CHECK_THROWS_AS(rig.factory.recompute_shield({0, 1, 2, 3, 4}, s), GroupTooLargeError);
}

TEST_CASE("shield_step: all-safe proposals pass with zero penalties") {
  Rig rig(open7(), 2);
  JointState s = state_at({{0, 0}, {6, 6}});
  const auto r = rig.manager.shield_step(s, {Action::kRight, Action::kLeft});
  CHECK(r.safe_actions == std::vector<Action>{Action::kRight, Action::kLeft});
  CHECK(r.penalties == std::vector<double>{0.0, 0.0});
  CHECK(r.recomputes == 2);
  // Durations tick down on the live shields.
  for (const auto& [sig, sh] : rig.manager.pool())
    CHECK(sh.remaining_duration() == rig.factory.options().k - 1);
}

TEST_CASE("shield_step: head-on pair corrected and penalized") {
  Rig rig(GridMap(2, 1, {}, {{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}), 1);
  JointState s = state_at({{0, 0}, {1, 0}});
  const auto r = rig.manager.shield_step(s, {Action::kRight, Action::kLeft});
  CHECK(r.safe_actions == std::vector<Action>{Action::kStay, Action::kStay});
  CHECK(r.penalties == std::vector<double>{-10.0, -10.0});
  CHECK(r.corrected == std::vector<bool>{true, true});
}

TEST_CASE("shield_step: far-apart pairs filter exactly as two isolated runs") {
  // Joint scenario: two pairs in opposite corners of a wide map.
  GridMap joint_map(13, 3, {},
                    {{0, 0}, {1, 0}, {11, 2}, {12, 2}},
                    {{0, 2}, {1, 2}, {11, 0}, {12, 0}});
  Rig joint_rig(std::move(joint_map), 1);
  JointState s = state_at({{0, 0}, {1, 0}, {11, 2}, {12, 2}});
  const std::vector<Action> proposals{Action::kRight, Action::kLeft, Action::kRight,
                                      Action::kLeft};
  const auto joint_result = joint_rig.manager.shield_step(s, proposals);
  REQUIRE(joint_rig.manager.pool().size() == 2);

  // Isolated runs of each pair on the same map.
  GridMap iso_map_a(13, 3, {}, {{0, 0}, {1, 0}}, {{0, 2}, {1, 2}});
  Rig rig_a(std::move(iso_map_a), 1);
  const auto ra = rig_a.manager.shield_step(state_at({{0, 0}, {1, 0}}),
                                            {Action::kRight, Action::kLeft});
  GridMap iso_map_b(13, 3, {}, {{11, 2}, {12, 2}}, {{11, 0}, {12, 0}});
  Rig rig_b(std::move(iso_map_b), 1);
  const auto rb = rig_b.manager.shield_step(state_at({{11, 2}, {12, 2}}),
                                            {Action::kRight, Action::kLeft});

  CHECK(joint_result.safe_actions[0] == ra.safe_actions[0]);
  CHECK(joint_result.safe_actions[1] == ra.safe_actions[1]);
  CHECK(joint_result.safe_actions[2] == rb.safe_actions[0]);
  CHECK(joint_result.safe_actions[3] == rb.safe_actions[1]);
}

TEST_CASE("shield_step: partition invariant, reuse freshness, and zero collisions") {
  // Random-walk four agents under shielding; every non-done agent is
  // monitored by exactly one live shield, reused shields are never
  // expired, and the exact-model run never collides.
  GridMap m(7, 7, {{{3, 3}}}, {{0, 0}, {6, 6}, {0, 6}, {6, 0}},
            {{6, 6}, {0, 0}, {6, 0}, {0, 6}});
  GridEnv env(m, 60);
  Rig rig(m, 2);
  std::mt19937 rng(7);

  for (int episode = 0; episode < 8; ++episode) {
    rig.manager.reset_episode();
    JointState s = env.reset(rng);
    bool done = false;
    while (!done) {
      std::vector<Action> proposals;
      for (int i = 0; i < s.agent_count(); ++i)
        proposals.push_back(static_cast<Action>(std::uniform_int_distribution<int>(0, 4)(rng)));
      const auto r = rig.manager.shield_step(s, proposals);

      // Partition invariant over non-done agents.
      std::set<int> covered;
      for (const auto& [sig, sh] : rig.manager.pool()) {
        CHECK(sh.remaining_duration() >= 0);
        for (int id : sig) {
          CHECK(covered.insert(id).second);
        }
      }
      for (int i = 0; i < s.agent_count(); ++i)
        if (!s.agents[static_cast<std::size_t>(i)].done) CHECK(covered.count(i) == 1);

      const StepOutcome out = env.step(s, r.safe_actions);
      REQUIRE(out.collisions == 0);
      s = out.next;
      done = out.episode_done;
    }
  }
}

TEST_CASE("shield_step: merge soundness via sampled reachable sets") {
  // If two agents' k-step reachable cells intersect, they end up in one
  // group. Sample random placements and check against brute-force
  // reachable sets.
  const GridMap m = open7();
  const Abstraction abs{&m};
  std::mt19937 rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    const Cell a{std::uniform_int_distribution<int>(0, 6)(rng),
                 std::uniform_int_distribution<int>(0, 6)(rng)};
    const Cell b{std::uniform_int_distribution<int>(0, 6)(rng),
                 std::uniform_int_distribution<int>(0, 6)(rng)};
    if (a == b) continue;
    // Brute-force k-step reach (Manhattan ball clipped to the map).
    const auto reach = [&](Cell c) {
      std::set<std::pair<int, int>> r;
      for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
          if (std::abs(x - c.x) + std::abs(y - c.y) <= k) r.insert({x, y});
      return r;
    };
    const auto ra = reach(a

);
    const auto rb = reach(b);
    bool intersects = false;
    for (const auto& cell : ra) intersects = intersects || rb.count(cell) > 0;

    const JointState s = state_at({a, b});
    const auto clusters = cluster_agents(s, {Action::kStay, Action::kStay}, k, abs);
    const bool merged = clusters.groups.size() == 1;
    if (intersects) CHECK(merged);  // threshold 2k is sound (may over-merge)
  }
}

TEST_CASE("shield cache: recurring configurations skip re-synthesis") {
  Rig rig(open7(), 2);
  const JointState s = state_at({{2, 2}, {3, 3}});
  rig.factory.recompute_shield({0, 1}, s);
  const std::size_t first = rig.factory.last_synthesis_states();
  CHECK(first > 0);
  rig.factory.recompute_shield({0, 1}, s);
  CHECK(rig.factory.last_synthesis_states() == 0);
}
