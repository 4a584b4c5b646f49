// Shared helpers for game/shield tests: small instance builders and the
// independent winning-region oracle (top-down memoized minimax, distinct
// from the library's backward-induction pass).
#pragma once

#include <map>
#include <memory>
#include <random>
#include <vector>

#include "dynashield/dynamic_manager.hpp"
#include "dynashield/dynamics_model.hpp"
#include "dynashield/ltl.hpp"
#include "dynashield/monitor.hpp"
#include "dynashield/safety_game.hpp"

namespace dynashield::testing {

inline const PropositionAlphabet& collision_alphabet() {
  static const PropositionAlphabet sigma({"collision"});
  return sigma;
}

inline std::shared_ptr<const Dfa> collision_monitor() {
  static const auto dfa = std::make_shared<const Dfa>(
      to_monitor_dfa(parse_ltl("G !collision"), collision_alphabet()));
  return dfa;
}

inline AbstractLabel make_label(std::initializer_list<Cell> cells, const GridMap& map) {
  const Abstraction abs{&map};
  JointState s;
  std::vector<int> ids;
  for (Cell c : cells) {
    AgentState a;
    a.cell = c;
    s.agents.push_back(a);
    ids.push_back(static_cast<int>(ids.size()));
  }
  return abs.label_of(s, ids);
}

struct BuiltGame {
  std::shared_ptr<const EnvUnrolling> unrolling;
  SafetyGame game;
};

inline BuiltGame build_grid_game(const GridMap& map, std::initializer_list<Cell> cells, int k) {
  const Abstraction abs{&map};
  const ExactGridModel model(map, abs);
  const AbstractLabel root = make_label(cells, map);
  auto unrolling = std::make_shared<const EnvUnrolling>(
      unroll(model, root, k, JointActionSpace{kGridActionCount, root.size}));
  SafetyGame game = build_game(unrolling, collision_monitor(), collision_alphabet());
  return {unrolling, std::move(game)};
}

// Independent oracle: recursive minimax with memoization. A state wins
// iff it satisfies the winning condition and (at the horizon) nothing
// more is required, or (before it) some action keeps every resolution
// winning.
class MinimaxOracle {
 public:
  explicit MinimaxOracle(const SafetyGame& game) : game_(&game) {}

  bool wins(std::uint32_t sid) {
    const auto it = memo_.find(sid);
    if (it != memo_.end()) return it->second;
    memo_[sid] = false;  // placeholder; the DAG has no cycles, never read
    bool result = game_->in_winning_condition[sid] != 0;
    if (result && static_cast<int>(game_->states[sid].layer) < game_->horizon) {
      result = false;
      for (int a = 0; a < game_->actions.count() && !result; ++a) {
        const auto [begin, end] = game_->successors(sid, a);
        if (begin == end) continue;
        bool all = true;
        for (const std::uint32_t* p = begin; p != end && all; ++p) all = wins(*p);
        result = all;
      }
    }
    memo_[sid] = result;
    return result;
  }

 private:
  const SafetyGame* game_;
  std::map<std::uint32_t, bool> memo_;
};

// Random small map: dims within [2,4], sparse obstacles, no starts needed.
inline GridMap random_map(std::mt19937& rng) {
  for (;;) {
    const int w = std::uniform_int_distribution<int>(2, 4)(rng);
    const int h = std::uniform_int_distribution<int>(2, 4)(rng);
    std::vector<Cell> obstacles;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.15) obstacles.push_back({x, y});
    if (static_cast<int>(obstacles.size()) >= w * h - 2) continue;
    std::vector<Cell> frees;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Cell c{x, y};
        bool blocked = false;
        for (Cell o : obstacles) blocked = blocked || o == c;
        if (!blocked) frees.push_back(c);
      }
    // Starts/targets are irrelevant for game construction; pick any two.
    if (frees.size() < 2) continue;
    return GridMap(w, h, obstacles, {frees[0]}, {frees[1]});
  }
}

// Distinct free cells for a random group.
inline std::vector<Cell> random_group_cells(const GridMap& map, int n, std::mt19937& rng) {
  std::vector<Cell> frees = map.free_cells();
  std::vector<Cell> out;
  for (int i = 0; i < n && !frees.empty(); ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, frees.size() - 1)(rng);
    out.push_back(frees[j]);
    frees.erase(frees.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return out;
}

}  // namespace dynashield::testing
