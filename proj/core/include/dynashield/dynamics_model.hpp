#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "dynashield/abstraction.hpp"
#include "dynashield/action.hpp"
#include "dynashield/envs.hpp"
#include "dynashield/grid_map.hpp"

namespace dynashield {

// Pluggable predictor of possible abstract successors. Implementations
// must never return an empty set, and a learned implementation's set must
// stay a superset of everything it has observed for that (label, action).
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::vector<AbstractLabel> possible_successors(const AbstractLabel& label,
                                                         const JointAction& action) const = 0;

  // Record one observed transition. Default: static models ignore it.
  virtual void observe(const AbstractLabel& label, const JointAction& action,
                       const AbstractLabel& next) {
    (void)label;
    (void)action;
    (void)next;
  }

  // Bumped on every mutation; lets shield caches invalidate.
  virtual std::uint64_t version() const { return 0; }
};

// Closed-form gridworld dynamics: each agent's move is resolved by the
// map (blocked moves stay in place), so every successor set is a
// singleton.
class ExactGridModel : public DynamicsModel {
 public:
  explicit ExactGridModel(const GridMap& map, Abstraction abstraction)
      : map_(&map), abstraction_(abstraction) {}

  std::vector<AbstractLabel> possible_successors(const AbstractLabel& label,
                                                 const JointAction& action) const override;

 private:
  const GridMap* map_;
  Abstraction abstraction_;
};

// Tabular count-based model, factored per agent: one shared table maps
// (cell, action) to successor-cell counts, and the joint prediction is
// the cross product of per-agent predictions.
//
// A (cell, action) pair with fewer than n_min observations falls back to
// the pessimistic completion {cell and its 4 in-bounds neighbors}, which
// provably contains the truth while agents move at most one cell per
// step. Disabling the completion (ablation) substitutes the observed
// cells, or {cell} when nothing was seen, and voids the safety argument.
class LearnedTabularModel : public DynamicsModel {
 public:
  LearnedTabularModel(const GridMap& map, Abstraction abstraction, int n_min = 5,
                      bool pessimistic_completion = true)
      : map_(&map),
        abstraction_(abstraction),
        n_min_(n_min),
        pessimistic_completion_(pessimistic_completion) {}

  std::vector<AbstractLabel> possible_successors(const AbstractLabel& label,
                                                 const JointAction& action) const override;

  void observe(const AbstractLabel& label, const JointAction& action,
               const AbstractLabel& next) override;

  // Per-agent transition record, the unit of the replay dataset.
  void observe_cell(Cell from, Action action, Cell to);

  std::uint64_t version() const override { return version_; }

  std::vector<Cell> per_agent_successors(Cell cell, Action action) const;

  // Observation count for one (cell, action) pair.
  int observation_count(Cell cell, Action action) const;

 private:
  const GridMap* map_;
  Abstraction abstraction_;
  int n_min_;
  bool pessimistic_completion_;
  std::uint64_t version_ = 1;

  // (cell index, action) -> successor cell index -> count
  std::map<std::pair<int, int>, std::map<int, int>> counts_;
};

// Stopping trajectory of a braking particle: states after each braking
// step, starting with the given one, until the velocity reaches zero.
std::vector<std::pair<Vec2, Vec2>> brake_trajectory(Vec2 pos, Vec2 vel, double decel,
                                                    double dt = 1.0);

// Conservative abstract dynamics for the particle environment over
// (cell, velocity-sign) agent states: per axis, every (displacement,
// next-sign) pair consistent with the action and the sign bucket is
// included. Sound as long as |v| * dt never exceeds one cell width.
class ParticleReachModel : public DynamicsModel {
 public:
  explicit ParticleReachModel(Abstraction abstraction) : abstraction_(abstraction) {}

  std::vector<AbstractLabel> possible_successors(const AbstractLabel& label,
                                                 const JointAction& action) const override;

 private:
  Abstraction abstraction_;
};

}  // namespace dynashield
