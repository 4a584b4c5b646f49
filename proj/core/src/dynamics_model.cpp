#include "dynashield/dynamics_model.hpp"

#include <algorithm>

#include "dynashield/errors.hpp"

namespace dynashield {

std::vector<AbstractLabel> ExactGridModel::possible_successors(const AbstractLabel& label,
                                                               const JointAction& action) const {
  if (action.size != label.size) throw Error("joint action size does not match the label");
  std::array<AgentAbs, kMaxGroup> next{};
  for (int i = 0; i < label.size; ++i) {
    const Cell to = map_->step_from(label[i].cell(), action[i]);
    next[static_cast<std::size_t>(i)] =
        AgentAbs{static_cast<std::int16_t>(to.x), static_cast<std::int16_t>(to.y), 0, 0};
  }
  return {abstraction_.successor_label(
      label, std::span<const AgentAbs>(next.data(), static_cast<std::size_t>(label.size)))};
}

void LearnedTabularModel::observe_cell(Cell from, Action action, Cell to) {
  counts_[{map_->cell_index(from), static_cast<int>(action)}][map_->cell_index(to)] += 1;
  ++version_;
}

void LearnedTabularModel::observe(const AbstractLabel& label, const JointAction& action,
                                  const AbstractLabel& next) {
  if (label.size != next.size) throw Error("observe: label and successor group sizes differ");
  for (int i = 0; i < label.size; ++i) observe_cell(label[i].cell(), action[i], next[i].cell());
}

int LearnedTabularModel::observation_count(Cell cell, Action action) const {
  const auto it = counts_.find({map_->cell_index(cell), static_cast<int>(action)});
  if (it == counts_.end()) return 0;
  int total = 0;
  for (const auto& [succ, c] : it->second) total += c;
  return total;
}

std::vector<Cell> LearnedTabularModel::per_agent_successors(Cell cell, Action action) const {
  const auto it = counts_.find({map_->cell_index(cell), static_cast<int>(action)});
  const int total = observation_count(cell, action);
  if (total > 0 && total >= n_min_) {
    std::vector<Cell> out;
    for (const auto& [succ_idx, c] : it->second)
      out.push_back(Cell{succ_idx % map_->width(), succ_idx / map_->width()});
    return out;
  }
  if (!pessimistic_completion_) {
    // Ablation: trust whatever was seen, or assume the agent holds still.
    if (it != counts_.end() && !it->second.empty()) {
      std::vector<Cell> out;
      for (const auto& [succ_idx, c] : it->second)
        out.push_back(Cell{succ_idx % map_->width(), succ_idx / map_->width()});
      return out;
    }
    return {cell};
  }
  // Pessimistic completion: the cell and its 4 in-bounds neighbors.
  std::vector<Cell> out{cell};
  const Cell nbrs[4] = {{cell.x, cell.y - 1}, {cell.x, cell.y + 1},
                        {cell.x - 1, cell.y}, {cell.x + 1, cell.y}};
  for (Cell n : nbrs)
    if (map_->in_bounds(n)) out.push_back(n);
  return out;
}

std::vector<AbstractLabel> LearnedTabularModel::possible_successors(
    const AbstractLabel& label, const JointAction& action) const {
  if (action.size != label.size) throw Error("joint action size does not match the label");
  std::vector<std::vector<Cell>> per_agent;
  per_agent.reserve(static_cast<std::size_t>(label.size));
  for (int i = 0; i < label.size; ++i)
    per_agent.push_back(per_agent_successors(label[i].cell(), action[i]));

  std::vector<AbstractLabel> out;
  std::array<AgentAbs, kMaxGroup> pick{};
  std::array<std::size_t, kMaxGroup> idx{};
  for (;;) {
    for (int i = 0; i < label.size; ++i) {
      const Cell c = per_agent[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
      pick[static_cast<std::size_t>(i)] =
          AgentAbs{static_cast<std::int16_t>(c.x), static_cast<std::int16_t>(c.y), 0, 0};
    }
    out.push_back(abstraction_.successor_label(
        label, std::span<const AgentAbs>(pick.data(), static_cast<std::size_t>(label.size))));
    int i = label.size - 1;
    while (i >= 0) {
      if (++idx[static_cast<std::size_t>(i)] < per_agent[static_cast<std::size_t>(i)].size()) break;
      idx[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  // The cross product can repeat labels when flag derivation coincides.
  std::sort(out.begin(), out.end(), [](const AbstractLabel& a, const AbstractLabel& b) {
    return a.pack() < b.pack();
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::pair<Vec2, Vec2>> brake_trajectory(Vec2 pos, Vec2 vel, double decel, double dt) {
  std::vector<std::pair<Vec2, Vec2>> traj{{pos, vel}};
  while (norm(vel) > 0.0) {
    brake_step(pos, vel, decel, dt);
    traj.emplace_back(pos, vel);
  }
  return traj;
}

namespace {

struct AxisMove {
  std::int8_t delta;
  std::int8_t sign;
};

// All (cell displacement, next velocity sign) pairs an axis can produce
// under an action, given its current sign bucket. `accel` is -1/0/+1 for
// deceleration/none/acceleration on this axis; brake is handled apart.
void axis_moves(std::int8_t sign, int accel, bool brake, std::vector<AxisMove>& out) {
  out.clear();
  const auto add = [&](std::int8_t d, std::int8_t s) {
    for (const AxisMove& m : out)
      if (m.delta == d && m.sign == s) return;
    out.push_back({d, s});
  };
  if (brake) {
    // Move at the current sign, then the speed shrinks toward zero.
    add(0, 0);
    if (sign != 0) {
      add(0, sign);
      add(sign, 0);
      add(sign, sign);
    }
    return;
  }
  std::vector<std::int8_t> next_signs;
  if (accel == 0) {
    next_signs = {sign};
  } else if (accel > 0) {
    if (sign < 0) next_signs = {-1, 0, 1};  // magnitude unknown: may cross zero
    else next_signs = {1};
  } else {
    if (sign > 0) next_signs = {-1, 0, 1};
    else next_signs = {-1};
  }
  for (std::int8_t s : next_signs) {
    add(0, s);
    if (s != 0) add(s, s);
  }
}

}  // namespace

std::vector<AbstractLabel> ParticleReachModel::possible_successors(
    const AbstractLabel& label, const JointAction& action) const {
  if (action.size != label.size) throw Error("joint action size does not match the label");

  // Per-agent abstract successor sets, then a cross product.
  std::vector<std::vector<AgentAbs>> per_agent(static_cast<std::size_t>(label.size));
  std::vector<AxisMove> mx, my;
  for (int i = 0; i < label.size; ++i) {
    const AgentAbs& a = label[i];
    const Action act = action[i];
    const bool brake = act == Action::kBrake;
    int ax = 0, ay = 0;
    if (act == Action::kLeft) ax = -1;
    if (act == Action::kRight) ax = 1;
    if (act == Action::kUp) ay = -1;
    if (act == Action::kDown) ay = 1;
    axis_moves(a.vx, ax, brake, mx);
    axis_moves(a.vy, ay, brake, my);
    for (const AxisMove& x : mx)
      for (const AxisMove& y : my)
        per_agent[static_cast<std::size_t>(i)].push_back(
            AgentAbs{static_cast<std::int16_t>(a.x + x.delta),
                     static_cast<std::int16_t>(a.y + y.delta), x.sign, y.sign});
  }

  std::vector<AbstractLabel> out;
  std::array<AgentAbs, kMaxGroup> pick{};
  std::array<std::size_t, kMaxGroup> idx{};
  for (;;) {
    for (int i = 0; i < label.size; ++i)
      pick[static_cast<std::size_t>(i)] =
          per_agent[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    out.push_back(abstraction_.successor_label(
        label, std::span<const AgentAbs>(pick.data(), static_cast<std::size_t>(label.size))));
    int i = label.size - 1;
    while (i >= 0) {
      if (++idx[static_cast<std::size_t>(i)] < per_agent[static_cast<std::size_t>(i)].size()) break;
      idx[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  std::sort(out.begin(), out.end(), [](const AbstractLabel& a, const AbstractLabel& b) {
    return a.pack() < b.pack();
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace dynashield
