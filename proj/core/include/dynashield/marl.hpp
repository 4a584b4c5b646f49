#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "dynashield/action.hpp"
#include "dynashield/envs.hpp"
#include "dynashield/grid_map.hpp"

namespace dynashield {

struct LearnerParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.999;  // multiplicative, per episode
  double epsilon_floor = 0.05;
};

// Independent tabular Q-learners, one table per agent over that agent's
// own cell (targets are fixed per agent, so the cell is the whole state).
class IndependentQLearners {
 public:
  IndependentQLearners(const GridMap& map, int agent_count, LearnerParams params,
                       int action_count = kGridActionCount);

  // Per-agent epsilon-greedy proposals; done agents emit stay. Draws from
  // the rng in agent order: one coin per live agent, plus one action draw
  // when exploring. Greedy ties break toward the smaller action id.
  std::vector<Action> select_actions(const JointState& state, std::mt19937& rng) const;

  // One-step TD backup: Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)),
  // with the bootstrap term zeroed when the agent's next state is terminal.
  void update(int agent, Cell s, Action a, double reward, Cell next, bool next_terminal);

  // Penalty-attribution rule for corrected steps: the executed action is
  // backed up with the environment reward, and the unsafe proposal is
  // additionally backed up with the shield penalty, so the learner is
  // steered away from proposals the shield keeps rejecting.
  void learn_step(int agent, Cell s, Action proposed, Action executed, double env_reward,
                  double penalty, Cell next, bool next_terminal);

  void decay_epsilon();
  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  int action_count() const { return action_count_; }

  double q_value(int agent, Cell s, Action a) const;
  Action greedy_action(int agent, Cell s) const;

  void save(const std::filesystem::path& dir) const;  // qtable_agent<i>.csv
  void load(const std::filesystem::path& dir);

 private:
  double* row(int agent, Cell s) {
    return &q_[static_cast<std::size_t>(agent)]
               [static_cast<std::size_t>(map_->cell_index(s)) *
                static_cast<std::size_t>(action_count_)];
  }
  const double* row(int agent, Cell s) const {
    return &q_[static_cast<std::size_t>(agent)]
               [static_cast<std::size_t>(map_->cell_index(s)) *
                static_cast<std::size_t>(action_count_)];
  }

  const GridMap* map_;
  LearnerParams params_;
  int action_count_;
  double epsilon_;
  std::vector<std::vector<double>> q_;  // [agent][cell * action_count + action]
};

}  // namespace dynashield
