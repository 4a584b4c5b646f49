#pragma once

#include <random>
#include <vector>

#include "dynashield/action.hpp"
#include "dynashield/grid_map.hpp"

namespace dynashield {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
double norm(Vec2 v);

// Raw per-agent state. Gridworld uses `cell`; the particle environment
// uses `pos`/`vel`. A done agent has reached its target and stays there
// until the episode ends.
struct AgentState {
  Cell cell;
  Vec2 pos;
  Vec2 vel;
  bool done = false;
};

struct JointState {
  std::vector<AgentState> agents;
  int step = 0;

  int agent_count() const { return static_cast<int>(agents.size()); }
};

struct StepOutcome {
  JointState next;
  std::vector<double> rewards;   // per agent
  int collisions = 0;            // colliding pairs this step
  bool episode_done = false;
};

// Gridworld rewards (sparse): -1 living penalty per non-done agent, -10
// additional if the agent collides, +100 on reaching its target.
inline constexpr double kLivingPenalty = -1.0;
inline constexpr double kCollisionPenalty = -10.0;
inline constexpr double kTargetReward = 100.0;

class GridEnv {
 public:
  GridEnv(GridMap map, int step_limit = 100, bool random_starts = false)
      : map_(std::move(map)), step_limit_(step_limit), random_starts_(random_starts) {}

  const GridMap& map() const { return map_; }
  int step_limit() const { return step_limit_; }

  // Fixed maps place agents on their start cells; random mode samples
  // distinct free cells (excluding targets). Deterministic given the rng
  // state.
  JointState reset(std::mt19937& rng) const;

  // Simultaneous moves. Moves into obstacles or borders resolve to stay;
  // done agents ignore their action and stay on their target. A collision
  // is two non-done agents on the same cell or swapping cells.
  StepOutcome step(const JointState& state, const std::vector<Action>& actions) const;

 private:
  GridMap map_;
  int step_limit_;
  bool random_starts_;
};

// Particle environment parameters. The action set adds `brake`; `stay`
// keeps the current velocity (the agent coasts).
struct ParticleParams {
  int agent_count = 2;
  double accel = 0.25;        // velocity change per acceleration action
  double v_max = 0.5;         // per-axis velocity clamp
  double brake_decel = 0.5;   // speed lost per braking step
  double radius = 0.25;       // collision when centers closer than 2*radius
  double bound = 3.0;         // out-of-range penalty beyond this coordinate
  double dt = 1.0;
  int step_limit = 50;
  double target_eps = 0.25;   // distance at which a target counts reached
};

// One braking step: move at the current velocity, then shed `decel` of
// speed (not below zero). Mirrors real braking: faster bodies need longer
// stopping distances.
void brake_step(Vec2& pos, Vec2& vel, double decel, double dt);

class ParticleEnv {
 public:
  explicit ParticleEnv(ParticleParams params);

  const ParticleParams& params() const { return params_; }
  const std::vector<Vec2>& targets() const { return targets_; }

  // Agents start evenly spaced on a circle with their targets at the
  // antipodal points, so straight-line policies interact near the center.
  JointState reset(std::mt19937& rng) const;

  // Acceleration actions add ±accel to one velocity axis before the
  // position integrates; stay coasts; brake decelerates along the
  // velocity. Reward is negated distance to target, with collision and
  // out-of-range penalties.
  StepOutcome step(const JointState& state, const std::vector<Action>& actions) const;

 private:
  ParticleParams params_;
  std::vector<Vec2> starts_;
  std::vector<Vec2> targets_;
};

}  // namespace dynashield
