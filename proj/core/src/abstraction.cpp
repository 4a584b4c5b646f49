#include "dynashield/abstraction.hpp"

#include <cmath>
#include <unordered_map>

#include "dynashield/dynamics_model.hpp"
#include "dynashield/errors.hpp"

namespace dynashield {

std::pair<std::uint64_t, std::uint64_t> AbstractLabel::pack() const {
  // 20 bits per agent (x+120, y+120, vx+1, vy+1), agents 0-2 in the low
  // bits of hi and agents 3-5 in lo; flags live in hi[61..63] and the
  // group size in lo[60..62], clear of every agent field, so the packing
  // is injective on in-range labels.
  std::uint64_t hi = 0, lo = 0;
  for (int i = 0; i < size; ++i) {
    const AgentAbs& a = agents[static_cast<std::size_t>(i)];
    const std::uint64_t packed = (static_cast<std::uint64_t>(a.x + 120) << 12) |
                                 (static_cast<std::uint64_t>(a.y + 120) << 4) |
                                 (static_cast<std::uint64_t>(a.vx + 1) << 2) |
                                 static_cast<std::uint64_t>(a.vy + 1);
    if (i < 3) {
      hi |= packed << (20 * i);
    } else {
      lo |= packed << (20 * (i - 3));
    }
  }
  const std::uint64_t flags =
      (collision ? 1u : 0u) | (out_of_bounds ? 2u : 0u) | (at_obstacle ? 4u : 0u);
  hi |= flags << 61;
  lo |= static_cast<std::uint64_t>(size) << 60;
  return {hi, lo};
}

AgentAbs Abstraction::agent_abs(const AgentState& raw) const {
  AgentAbs a;
  if (is_grid()) {
    a.x = static_cast<std::int16_t>(raw.cell.x);
    a.y = static_cast<std::int16_t>(raw.cell.y);
    a.vx = 0;
    a.vy = 0;
  } else {
    // Cells clamp to the packable coordinate range; the boundary value
    // doubles as the out_of_bounds sentinel in derive_flags.
    const auto cell_of = [&](double pos) -> std::int16_t {
      const double c = std::floor(pos / cell_width);
      return static_cast<std::int16_t>(std::clamp(c, -120.0, 120.0));
    };
    a.x = cell_of(raw.pos.x);
    a.y = cell_of(raw.pos.y);
    const auto bucket = [](double v) -> std::int8_t {
      if (v > 0.0) return 1;
      if (v < 0.0) return -1;
      return 0;
    };
    a.vx = bucket(raw.vel.x);
    a.vy = bucket(raw.vel.y);
  }
  return a;
}

void Abstraction::derive_flags(AbstractLabel& label) const {
  label.out_of_bounds = false;
  label.at_obstacle = false;
  for (int i = 0; i < label.size; ++i) {
    const Cell c = label[i].cell();
    if (is_grid()) {
      if (!map->in_bounds(c)) label.out_of_bounds = true;
      else if (map->is_obstacle(c)) label.at_obstacle = true;
    } else {
      if (c.x >= 120 || c.x <= -120 || c.y >= 120 || c.y <= -120) label.out_of_bounds = true;
    }
  }
  for (int i = 0; i < label.size && !label.collision; ++i)
    for (int j = i + 1; j < label.size; ++j)
      if (label[i].cell() == label[j].cell()) {
        label.collision = true;
        break;
      }
}

AbstractLabel Abstraction::label_of(const JointState& raw, std::span<const int> agent_ids) const {
  if (agent_ids.size() > kMaxGroup) throw GroupTooLargeError("group exceeds the compiled-in cap");
  AbstractLabel label;
  label.size = static_cast<int>(agent_ids.size());
  for (int i = 0; i < label.size; ++i)
    label[i] = agent_abs(raw.agents[static_cast<std::size_t>(agent_ids[static_cast<std::size_t>(i)])]);
  label.collision = false;
  derive_flags(label);
  return label;
}

AbstractLabel Abstraction::successor_label(const AbstractLabel& prev,
                                           std::span<const AgentAbs> next_agents) const {
  AbstractLabel label;
  label.size = static_cast<int>(next_agents.size());
  for (int i = 0; i < label.size; ++i) label[i] = next_agents[static_cast<std::size_t>(i)];
  label.collision = false;
  // Swap collision: i and j exchanged cells in this transition.
  for (int i = 0; i < label.size && !label.collision; ++i)
    for (int j = i + 1; j < label.size; ++j)
      if (label[i].cell() == prev[j].cell() && label[j].cell() == prev[i].cell()) {
        label.collision = true;
        break;
      }
  derive_flags(label);
  return label;
}

std::size_t EnvUnrolling::node_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

EnvUnrolling unroll(const DynamicsModel& model, const AbstractLabel& root, int k,
                    const JointActionSpace& actions, int max_group_size) {
  if (k < 1) throw Error("unroll: horizon must be at least 1");
  if (root.size > max_group_size)
    throw GroupTooLargeError("group of " + std::to_string(root.size) +
                             " exceeds max_group_size " + std::to_string(max_group_size) +
                             "; clustering produced an intractable merge");

  EnvUnrolling u;
  u.depth = k;
  u.actions = actions;
  u.layers.resize(static_cast<std::size_t>(k) + 1);
  u.edges.resize(static_cast<std::size_t>(k));
  u.layers[0] = {root};

  const int n_actions = actions.count();
  for (int t = 0; t < k; ++t) {
    auto& layer = u.layers[static_cast<std::size_t>(t)];
    auto& next_layer = u.layers[static_cast<std::size_t>(t) + 1];
    auto& edges = u.edges[static_cast<std::size_t>(t)];
    edges.assign(layer.size() * static_cast<std::size_t>(n_actions), {});
    std::unordered_map<AbstractLabel, std::uint32_t, LabelHash> ids;
    for (std::size_t i = 0; i < layer.size(); ++i) {
      for (int a = 0; a < n_actions; ++a) {
        const auto succs = model.possible_successors(layer[i], actions.decode(a));
        if (succs.empty()) throw Error("dynamics model returned an empty successor set");
        auto& slot = edges[i * static_cast<std::size_t>(n_actions) + static_cast<std::size_t>(a)];
        slot.reserve(succs.size());
        for (const AbstractLabel& s : succs) {
          const auto [it, inserted] =
              ids.emplace(s, static_cast<std::uint32_t>(next_layer.size()));
          if (inserted) next_layer.push_back(s);
          slot.push_back(it->second);
        }
      }
    }
  }
  return u;
}

}  // namespace dynashield
