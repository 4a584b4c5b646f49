#include <array>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "dynashield/envs.hpp"
#include "dynashield/marl.hpp"

using namespace dynashield;

namespace {

const GridMap& open5() {
  static const GridMap m = GridMap::parse(
      "0....\n"
      ".....\n"
      ".....\n"
      ".....\n"
      "....a\n");
  return m;
}

JointState at(Cell c) {
  JointState s;
  AgentState a;
  a.cell = c;
  s.agents.push_back(a);
  return s;
}

}  // namespace

TEST_CASE("select_actions: zero epsilon on an all-zero table picks stay") {
  LearnerParams p;
  p.epsilon_start = 0.0;
  IndependentQLearners q(open5(), 1, p);
  std::mt19937 rng(0);
  CHECK(q.select_actions(at({2, 2}), rng) == std::vector<Action>{Action::kStay});
}

TEST_CASE("select_actions: argmax follows the table") {
  LearnerParams p;
  p.epsilon_start = 0.0;
  IndependentQLearners q(open5(), 1, p);
  q.update(0, {2, 2}, Action::kRight, 1.0, {3, 2}, true);  // bumps Q(s,right)
  std::mt19937 rng(0);
  CHECK(q.select_actions(at({2, 2}), rng) == std::vector<Action>{Action::kRight});
}

TEST_CASE("select_actions: epsilon=1 is uniform over the five actions") {
  LearnerParams p;
  p.epsilon_start = 1.0;
  IndependentQLearners q(open5(), 1, p);
  std::mt19937 rng(12345);
  std::array<int, kGridActionCount> counts{};
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(q.select_actions(at({2, 2}), rng)[0])] += 1;
  for (int a = 0; a < kGridActionCount; ++a) {
    const double freq = static_cast<double>(counts[static_cast<std::size_t>(a)]) / n;
    CHECK(freq > 0.17);
    CHECK(freq < 0.23);
  }
}

TEST_CASE("select_actions: done agents emit stay without consuming rng draws") {
  LearnerParams p;
  p.epsilon_start = 1.0;
  IndependentQLearners q(open5(), 2, p);
  JointState s;
  AgentState a0, a1;
  a0.cell = {0, 0};
  a0.done = true;
  a1.cell = {1, 1};
  s.agents = {a0, a1};
  std::mt19937 r1(9), r2(9);
  const auto acts = q.select_actions(s, r1);
  CHECK(acts[0] == Action::kStay);
  // The live agent's draw must be the first draw of the stream.
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  (void)coin(r2);
  std::uniform_int_distribution<int> pick(0, kGridActionCount - 1);
  CHECK(acts[1] == static_cast<Action>(pick(r2)));
}

TEST_CASE("update: basic TD arithmetic") {
  LearnerParams p;
  p.alpha = 0.1;
  p.gamma = 0.9;
  IndependentQLearners q(open5(), 1, p);
  q.update(0, {1, 1}, Action::kUp, -1.0, {1, 0}, false);
  CHECK(q.q_value(0, {1, 1}, Action::kUp) == doctest::Approx(-0.1));
}

TEST_CASE("update: terminal next state drops the bootstrap term") {
  LearnerParams p;
  p.alpha = 0.5;
  p.gamma = 0.9;
  IndependentQLearners q(open5(), 1, p);
  // Prime the next state's value; it must be ignored for terminal backups.
  q.update(0, {4, 4}, Action::kStay, 10.0, {4, 4}, true);
  q.update(0, {3, 4}, Action::kRight, 100.0, {4, 4}, true);
  CHECK(q.q_value(0, {3, 4}, Action::kRight) == doctest::Approx(50.0));
}

TEST_CASE("learn_step: corrected steps update both actions") {
  LearnerParams p;
  p.alpha = 0.1;
  p.gamma = 0.9;
  IndependentQLearners q(open5(), 1, p);
  // Proposed right was corrected to stay; env reward -1, penalty -10.
  q.learn_step(0, {2, 2}, Action::kRight, Action::kStay, -1.0, -10.0, {2, 2}, false);
  CHECK(q.q_value(0, {2, 2}, Action::kStay) == doctest::Approx(-0.1));
  CHECK(q.q_value(0, {2, 2}, Action::kRight) == doctest::Approx(-1.0));
  // Uncorrected steps touch only the executed action.
  q.learn_step(0, {1, 1}, Action::kDown, Action::kDown, -1.0, 0.0, {1, 2}, false);
  CHECK(q.q_value(0, {1, 1}, Action::kDown) == doctest::Approx(-0.1));
  CHECK(q.q_value(0, {1, 1}, Action::kStay) == doctest::Approx(0.0));
}

TEST_CASE("q-values stay bounded on bounded-reward runs") {
  LearnerParams p;
  IndependentQLearners q(open5(), 1, p);
  GridEnv env(open5(), 50);
  std::mt19937 rng(3);
  const double bound = 100.0 / (1.0 - p.gamma) + 11.0;
  for (int ep = 0; ep < 100; ++ep) {
    JointState s = env.reset(rng);
    bool done = false;
    while (!done) {
      const auto acts = q.select_actions(s, rng);
      const StepOutcome out = env.step(s, acts);
      q.update(0, s.agents[0].cell, acts[0], out.rewards[0], out.next.agents[0].cell,
               out.next.agents[0].done);
      s = out.next;
      done = out.episode_done;
    }
    q.decay_epsilon();
  }
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x)
      for (int a = 0; a < kGridActionCount; ++a)
        CHECK(std::abs(q.q_value(0, {x, y}, static_cast<Action>(a))) <= bound);
}

TEST_CASE("single agent converges to the Manhattan-optimal route") {
  LearnerParams p;
  IndependentQLearners q(open5(), 1, p);
  GridEnv env(open5(), 100);
  std::mt19937 rng(11);
  for (int ep = 0; ep < 2000; ++ep) {
    JointState s = env.reset(rng);
    bool done = false;
    while (!done) {
      const auto acts = q.select_actions(s, rng);
      const StepOutcome out = env.step(s, acts);
      q.learn_step(0, s.agents[0].cell, acts[0], acts[0], out.rewards[0], 0.0,
                   out.next.agents[0].cell, out.next.agents[0].done);
      s = out.next;
      done = out.episode_done;
    }
    q.decay_epsilon();
  }
  // Greedy rollout from the fixed start.
  q.set_epsilon(0.0);
  JointState s = env.reset(rng);
  int steps = 0;
  while (!s.agents[0].done && steps < 50) {
    const auto acts = q.select_actions(s, rng);
    s = env.step(s, acts).next;
    ++steps;
  }
  CHECK(s.agents[0].done);
  CHECK(steps == 8);  // Manhattan distance (0,0) -> (4,4)
}

TEST_CASE("q-table save/load round trip") {
  LearnerParams p;
  IndependentQLearners q(open5(), 2, p);
  q.update(0, {1, 2}, Action::kLeft, -3.5, {0, 2}, false);
  q.update(1, {3, 3}, Action::kDown, 2.25, {3, 4}, true);
  const auto dir = std::filesystem::temp_directory_path() / "dynashield_qtest";
  std::filesystem::create_directories(dir);
  q.save(dir);
  IndependentQLearners loaded(open5(), 2, p);
  loaded.load(dir);
  CHECK(loaded.q_value(0, {1, 2}, Action::kLeft) == doctest::Approx(q.q_value(0, {1, 2}, Action::kLeft)));
  CHECK(loaded.q_value(1, {3, 3}, Action::kDown) == doctest::Approx(q.q_value(1, {3, 3}, Action::kDown)));
  std::filesystem::remove_all(dir);
}
