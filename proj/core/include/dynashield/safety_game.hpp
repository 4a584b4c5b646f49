#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dynashield/abstraction.hpp"
#include "dynashield/dfa.hpp"
#include "dynashield/monitor.hpp"
#include "dynashield/shield.hpp"

namespace dynashield {

// Letter of the specification alphabet read at a label: each proposition
// is one of the label's derived flags. Unknown propositions are rejected.
LetterId letter_for_label(const AbstractLabel& label, const PropositionAlphabet& alphabet);

// Explicit k-step two-player safety game: states are (unrolling node,
// spec-DFA state, time) triples reachable from the root; after the agents
// pick a joint action the environment resolves which predicted successor
// occurs. The spec component has already consumed each state's own label,
// so winning-condition membership is just spec acceptance.
struct SafetyGame {
  struct State {
    std::uint32_t layer;  // time index t, 0 at the root
    std::uint32_t node;   // index into unrolling.layers[layer]
    StateId q;            // spec-DFA state after reading this label
  };

  std::shared_ptr<const EnvUnrolling> unrolling;
  std::shared_ptr<const Dfa> spec;
  PropositionAlphabet alphabet{std::vector<std::string>{}};

  std::vector<State> states;
  std::uint32_t initial = 0;
  int horizon = 0;
  JointActionSpace actions;
  std::vector<std::uint8_t> in_winning_condition;  // F^k membership per state

  // CSR: successors of (state, action) live at
  // edge_targets[edge_offsets[s*A+a] .. edge_offsets[s*A+a+1]).
  std::vector<std::uint32_t> edge_offsets;
  std::vector<std::uint32_t> edge_targets;

  std::size_t state_count() const { return states.size(); }
  const AbstractLabel& label_of(std::uint32_t sid) const {
    const State& st = states[sid];
    return unrolling->layers[st.layer][st.node];
  }
  std::pair<const std::uint32_t*, const std::uint32_t*> successors(std::uint32_t sid,
                                                                   int action) const {
    const std::size_t base = static_cast<std::size_t>(sid) * static_cast<std::size_t>(actions.count()) +
                             static_cast<std::size_t>(action);
    return {edge_targets.data() + edge_offsets[base], edge_targets.data() + edge_offsets[base + 1]};
  }
};

// Builds the explicit game from a bounded unrolling and a spec monitor.
// The initial spec state has consumed the root label.
SafetyGame build_game(std::shared_ptr<const EnvUnrolling> unrolling,
                      std::shared_ptr<const Dfa> spec, const PropositionAlphabet& alphabet);

using WinningRegion = std::vector<std::uint8_t>;

// Greatest fixed point by backward induction over the time-layered DAG:
// a horizon state wins iff it satisfies the winning condition; an earlier
// state wins iff it satisfies the winning condition and some joint action
// keeps every environment resolution winning.
WinningRegion winning_region(const SafetyGame& game);

// Translates a solved game into a shield (explicit-table core). The
// default order is ascending joint-action id unless one is given. Throws
// UnsafeStartError when the initial state is not winning.
Shield extract_shield(SafetyGame game, WinningRegion w, std::vector<int> agent_ids = {},
                      std::vector<int> default_order = {});

// JSON dump of the game and its winning region (states, transitions,
// winning flags) for debugging.
std::string game_to_json(const SafetyGame& game, const WinningRegion& w);

}  // namespace dynashield
