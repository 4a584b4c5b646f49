#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dynashield/action.hpp"
#include "dynashield/envs.hpp"
#include "dynashield/grid_map.hpp"

namespace dynashield {

class DynamicsModel;

// Abstract state of one monitored agent: grid cell plus per-axis velocity
// sign bucket (-1/0/+1; always 0 in the gridworld).
struct AgentAbs {
  std::int16_t x = 0;
  std::int16_t y = 0;
  std::int8_t vx = 0;
  std::int8_t vy = 0;

  Cell cell() const { return Cell{x, y}; }
  bool operator==(const AgentAbs&) const = default;
};

// Symbolic abstraction of a monitored group. The derived propositions are
// functions of the per-agent entries and, for collision-by-swap, of the
// transition that produced the label.
struct AbstractLabel {
  std::array<AgentAbs, kMaxGroup> agents{};
  int size = 0;
  bool collision = false;
  bool out_of_bounds = false;
  bool at_obstacle = false;

  const AgentAbs& operator[](int i) const { return agents[static_cast<std::size_t>(i)]; }
  AgentAbs& operator[](int i) { return agents[static_cast<std::size_t>(i)]; }

  bool operator==(const AbstractLabel& o) const {
    if (size != o.size || collision != o.collision || out_of_bounds != o.out_of_bounds ||
        at_obstacle != o.at_obstacle)
      return false;
    for (int i = 0; i < size; ++i)
      if (!(agents[static_cast<std::size_t>(i)] == o.agents[static_cast<std::size_t>(i)])) return false;
    return true;
  }

  // Injective 128-bit packing for hashing and map keys; coordinates must
  // lie within [-120, 120].
  std::pair<std::uint64_t, std::uint64_t> pack() const;
};

struct LabelHash {
  std::size_t operator()(const AbstractLabel& l) const {
    const auto [hi, lo] = l.pack();
    std::uint64_t h = hi * 0x9E3779B97F4A7C15ull;
    h ^= lo + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Environment-specific abstraction parameters. The gridworld abstraction
// is the identity on cells; the particle abstraction discretizes position
// into cells of width `cell_width` and velocity into sign buckets.
struct Abstraction {
  const GridMap* map = nullptr;  // null for the particle environment
  double cell_width = 0.5;

  bool is_grid() const { return map != nullptr; }

  AgentAbs agent_abs(const AgentState& raw) const;

  // Label of the monitored agents in `agent_ids` (raw-state indices),
  // in the given order. Collision here covers shared cells only; swap
  // collisions are a transition property set by successor_label.
  AbstractLabel label_of(const JointState& raw, std::span<const int> agent_ids) const;

  // Label reached from `prev` when the group's agents move to
  // `next_agents`. Sets collision on shared cells or swapped cells,
  // plus out_of_bounds / at_obstacle from the destination cells.
  AbstractLabel successor_label(const AbstractLabel& prev,
                                std::span<const AgentAbs> next_agents) const;

  // Flag computation shared by label_of/successor_label.
  void derive_flags(AbstractLabel& label) const;
};

// Bounded breadth-first unrolling of a dynamics model from a root label:
// layer t holds the labels reachable in exactly t steps, and
// edges[t][node * actions.count() + a] lists successor node ids in layer
// t+1.
struct EnvUnrolling {
  int depth = 0;
  JointActionSpace actions;
  std::vector<std::vector<AbstractLabel>> layers;
  std::vector<std::vector<std::vector<std::uint32_t>>> edges;

  const AbstractLabel& root() const { return layers[0][0]; }
  std::size_t node_count() const;
};

// Expands `model.possible_successors` breadth-first to depth k,
// deduplicating labels within each layer. Throws GroupTooLargeError when
// the root group exceeds max_group_size.
EnvUnrolling unroll(const DynamicsModel& model, const AbstractLabel& root, int k,
                    const JointActionSpace& actions, int max_group_size = 4);

}  // namespace dynashield
