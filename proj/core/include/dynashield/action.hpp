#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "dynashield/errors.hpp"

namespace dynashield {

// Per-agent abstract action. Order matters: it doubles as the default
// preference order for shield corrections (conservative action first,
// then lexicographic).
enum class Action : std::uint8_t { kStay = 0, kUp, kDown, kLeft, kRight, kBrake };

inline constexpr int kGridActionCount = 5;      // stay,up,down,left,right
inline constexpr int kParticleActionCount = 6;  // + brake
inline constexpr int kMaxGroup = 6;             // hard cap on merged group size

const char* action_name(Action a);
Action action_from_name(const std::string& name);

// Joint action of a (small) agent group, value type.
struct JointAction {
  std::array<Action, kMaxGroup> actions{};
  int size = 0;

  Action operator[](int i) const { return actions[static_cast<std::size_t>(i)]; }
  Action& operator[](int i) { return actions[static_cast<std::size_t>(i)]; }

  bool operator==(const JointAction& o) const {
    if (size != o.size) return false;
    for (int i = 0; i < size; ++i)
      if (actions[static_cast<std::size_t>(i)] != o.actions[static_cast<std::size_t>(i)]) return false;
    return true;
  }
};

// Joint action alphabet A^m for a group of `agents` agents with
// `per_agent` actions each. Joint actions are indexed 0..count()-1 with
// agent 0 in the most significant position, so ascending index order is
// exactly [stay..]-first lexicographic order.
struct JointActionSpace {
  int per_agent = kGridActionCount;
  int agents = 1;

  int count() const {
    int c = 1;
    for (int i = 0; i < agents; ++i) c *= per_agent;
    return c;
  }

  JointAction decode(int id) const {
    JointAction ja;
    ja.size = agents;
    for (int i = agents - 1; i >= 0; --i) {
      ja[i] = static_cast<Action>(id % per_agent);
      id /= per_agent;
    }
    return ja;
  }

  int encode(const JointAction& ja) const {
    if (ja.size != agents) throw Error("joint action size does not match action space");
    int id = 0;
    for (int i = 0; i < agents; ++i) {
      const int a = static_cast<int>(ja[i]);
      if (a >= per_agent) throw Error("action outside this action space");
      id = id * per_agent + a;
    }
    return id;
  }
};

}  // namespace dynashield
