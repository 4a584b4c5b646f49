#include "dynashield/marl.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dynashield/errors.hpp"

namespace dynashield {

IndependentQLearners::IndependentQLearners(const GridMap& map, int agent_count,
                                           LearnerParams params, int action_count)
    : map_(&map), params_(params), action_count_(action_count), epsilon_(params.epsilon_start) {
  if (params_.alpha <= 0.0 || params_.alpha > 1.0) throw ConfigError("alpha must be in (0,1]");
  if (params_.gamma < 0.0 || params_.gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
  if (params_.epsilon_start < 0.0 || params_.epsilon_start > 1.0)
    throw ConfigError("epsilon must be in [0,1]");
  if (action_count_ < 1 || action_count_ > kParticleActionCount)
    throw ConfigError("unsupported action count");
  q_.assign(static_cast<std::size_t>(agent_count),
            std::vector<double>(
                static_cast<std::size_t>(map.cell_count()) * static_cast<std::size_t>(action_count_),
                0.0));
}

std::vector<Action> IndependentQLearners::select_actions(const JointState& state,
                                                         std::mt19937& rng) const {
  std::vector<Action> out(static_cast<std::size_t>(state.agent_count()), Action::kStay);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, action_count_ - 1);
  for (int i = 0; i < state.agent_count(); ++i) {
    const auto& ag = state.agents[static_cast<std::size_t>(i)];
    if (ag.done) continue;  // stays, no rng draw
    if (coin(rng) < epsilon_) {
      out[static_cast<std::size_t>(i)] = static_cast<Action>(pick(rng));
    } else {
      out[static_cast<std::size_t>(i)] = greedy_action(i, ag.cell);
    }
  }
  return out;
}

Action IndependentQLearners::greedy_action(int agent, Cell s) const {
  const double* r = row(agent, s);
  int best = 0;
  for (int a = 1; a < action_count_; ++a)
    if (r[a] > r[best]) best = a;
  return static_cast<Action>(best);
}

double IndependentQLearners::q_value(int agent, Cell s, Action a) const {
  return row(agent, s)[static_cast<int>(a)];
}

void IndependentQLearners::update(int agent, Cell s, Action a, double reward, Cell next,
                                  bool next_terminal) {
  double bootstrap = 0.0;
  if (!next_terminal) {
    const double* nr = row(agent, next);
    bootstrap = *std::max_element(nr, nr + action_count_);
  }
  double& q = row(agent, s)[static_cast<int>(a)];
  q += params_.alpha * (reward + params_.gamma * bootstrap - q);
}

void IndependentQLearners::learn_step(int agent, Cell s, Action proposed, Action executed,
                                      double env_reward, double penalty, Cell next,
                                      bool next_terminal) {
  update(agent, s, executed, env_reward, next, next_terminal);
  if (proposed != executed) update(agent, s, proposed, penalty, next, next_terminal);
}

void IndependentQLearners::decay_epsilon() {
  epsilon_ = std::max(params_.epsilon_floor, epsilon_ * params_.epsilon_decay);
}

void IndependentQLearners::save(const std::filesystem::path& dir) const {
  for (std::size_t agent = 0; agent < q_.size(); ++agent) {
    std::ofstream out(dir / ("qtable_agent" + std::to_string(agent) + ".csv"));
    if (!out) throw Error("cannot write q-table under " + dir.string());
    out << "cell_x,cell_y";
    for (int a = 0; a < action_count_; ++a) out << "," << action_name(static_cast<Action>(a));
    out << "\n";
    char buf[64];
    for (int y = 0; y < map_->height(); ++y) {
      for (int x = 0; x < map_->width(); ++x) {
        out << x << "," << y;
        const double* r = row(static_cast<int>(agent), {x, y});
        for (int a = 0; a < action_count_; ++a) {
          std::snprintf(buf, sizeof buf, ",%.9g", r[a]);
          out << buf;
        }
        out << "\n";
      }
    }
  }
}

void IndependentQLearners::load(const std::filesystem::path& dir) {
  for (std::size_t agent = 0; agent < q_.size(); ++agent) {
    const auto path = dir / ("qtable_agent" + std::to_string(agent) + ".csv");
    std::ifstream in(path);
    if (!in) throw Error("cannot read q-table " + path.string());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string token;
      std::vector<std::string> fields;
      while (std::getline(ss, token, ',')) fields.push_back(token);
      if (static_cast<int>(fields.size()) != 2 + action_count_)
        throw Error("malformed q-table row in " + path.string());
      const Cell c{std::stoi(fields[0]), std::stoi(fields[1])};
      double* r = row(static_cast<int>(agent), c);
      for (int a = 0; a < action_count_; ++a)
        r[a] = std::stod(fields[static_cast<std::size_t>(2 + a)]);
    }
  }
}

}  // namespace dynashield
