#include "dynashield/envs.hpp"

#include <algorithm>
#include <cmath>

#include "dynashield/errors.hpp"

namespace dynashield {

double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

JointState GridEnv::reset(std::mt19937& rng) const {
  JointState s;
  s.step = 0;
  const int n = map_.agent_count();
  s.agents.resize(static_cast<std::size_t>(n));
  if (!random_starts_) {
    for (int i = 0; i < n; ++i) s.agents[static_cast<std::size_t>(i)].cell = map_.starts()[static_cast<std::size_t>(i)];
    return s;
  }
  std::vector<Cell> pool = map_.free_cells();
  // Keep targets out of the start pool so no agent spawns already done.
  std::erase_if(pool, [&](Cell c) {
    return std::find(map_.targets().begin(), map_.targets().end(), c) != map_.targets().end();
  });
  if (static_cast<int>(pool.size()) < n)
    throw ConfigError("not enough free cells to place all agents");
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t j = pick(rng);
    s.agents[static_cast<std::size_t>(i)].cell = pool[j];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return s;
}

StepOutcome GridEnv::step(const JointState& state, const std::vector<Action>& actions) const {
  const int n = state.agent_count();
  if (static_cast<int>(actions.size()) != n) throw Error("grid_step: one action per agent required");

  StepOutcome out;
  out.next = state;
  out.next.step = state.step + 1;
  out.rewards.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<Cell> prev(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& ag = state.agents[static_cast<std::size_t>(i)];
    prev[static_cast<std::size_t>(i)] = ag.cell;
    next[static_cast<std::size_t>(i)] =
        ag.done ? ag.cell : map_.step_from(ag.cell, actions[static_cast<std::size_t>(i)]);
  }

  // Collisions among non-done agents: shared cell or swapped cells.
  std::vector<bool> collided(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    if (state.agents[static_cast<std::size_t>(i)].done) continue;
    for (int j = i + 1; j < n; ++j) {
      if (state.agents[static_cast<std::size_t>(j)].done) continue;
      const bool same = next[static_cast<std::size_t>(i)] == next[static_cast<std::size_t>(j)];
      const bool swap = next[static_cast<std::size_t>(i)] == prev[static_cast<std::size_t>(j)] &&
                        next[static_cast<std::size_t>(j)] == prev[static_cast<std::size_t>(i)];
      if (same || swap) {
        ++out.collisions;
        collided[static_cast<std::size_t>(i)] = true;
        collided[static_cast<std::size_t>(j)] = true;
      }
    }
  }

  bool all_done = true;
  for (int i = 0; i < n; ++i) {
    auto& ag = out.next.agents[static_cast<std::size_t>(i)];
    if (state.agents[static_cast<std::size_t>(i)].done) {
      // Done agents earn nothing and stay put.
      all_done = all_done && true;
      continue;
    }
    ag.cell = next[static_cast<std::size_t>(i)];
    double r = kLivingPenalty;
    if (collided[static_cast<std::size_t>(i)]) r += kCollisionPenalty;
    if (ag.cell == map_.targets()[static_cast<std::size_t>(i)]) {
      r += kTargetReward;
      ag.done = true;
    }
    out.rewards[static_cast<std::size_t>(i)] = r;
    all_done = all_done && ag.done;
  }
  out.episode_done = all_done || out.next.step >= step_limit_;
  return out;
}

// ── Particle environment ────────────────────────────────────────────────

void brake_step(Vec2& pos, Vec2& vel, double decel, double dt) {
  pos = pos + vel * dt;
  const double speed = norm(vel);
  if (speed <= decel) {
    vel = {0.0, 0.0};
  } else {
    const double scale = (speed - decel) / speed;
    vel = vel * scale;
  }
}

ParticleEnv::ParticleEnv(ParticleParams params) : params_(params) {
  if (params_.agent_count < 1) throw ConfigError("particle env needs at least one agent");
  const int n = params_.agent_count;
  const double r = params_.bound / 2.0;
  // Targets sit a quarter turn ahead of each start: the chords do not
  // cross, so encounters are oblique near-misses rather than head-on
  // approaches the sign-bucket abstraction cannot certify as safe.
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    const double psi = phi + M_PI / 2.0;
    starts_.push_back({r * std::cos(phi), r * std::sin(phi)});
    targets_.push_back({r * std::cos(psi), r * std::sin(psi)});
  }
}

JointState ParticleEnv::reset(std::mt19937& rng) const {
  (void)rng;  // placement is deterministic; rng kept for interface parity
  JointState s;
  s.step = 0;
  s.agents.resize(static_cast<std::size_t>(params_.agent_count));
  for (int i = 0; i < params_.agent_count; ++i) {
    s.agents[static_cast<std::size_t>(i)].pos = starts_[static_cast<std::size_t>(i)];
    s.agents[static_cast<std::size_t>(i)].vel = {0.0, 0.0};
  }
  return s;
}

StepOutcome ParticleEnv::step(const JointState& state, const std::vector<Action>& actions) const {
  const int n = state.agent_count();
  if (static_cast<int>(actions.size()) != n)
    throw Error("particle_step: one action per agent required");

  StepOutcome out;
  out.next = state;
  out.next.step = state.step + 1;
  out.rewards.assign(static_cast<std::size_t>(n), 0.0);

  const auto clamp_axis = [&](double v) {
    return std::clamp(v, -params_.v_max, params_.v_max);
  };

  for (int i = 0; i < n; ++i) {
    auto& ag = out.next.agents[static_cast<std::size_t>(i)];
    if (ag.done) continue;
    const Action a = actions[static_cast<std::size_t>(i)];
    switch (a) {
      case Action::kStay:
        ag.pos = ag.pos + ag.vel * params_.dt;
        break;
      case Action::kUp:
        ag.vel.y = clamp_axis(ag.vel.y - params_.accel);
        ag.pos = ag.pos + ag.vel * params_.dt;
        break;
      case Action::kDown:
        ag.vel.y = clamp_axis(ag.vel.y + params_.accel);
        ag.pos = ag.pos + ag.vel * params_.dt;
        break;
      case Action::kLeft:
        ag.vel.x = clamp_axis(ag.vel.x - params_.accel);
        ag.pos = ag.pos + ag.vel * params_.dt;
        break;
      case Action::kRight:
        ag.vel.x = clamp_axis(ag.vel.x + params_.accel);
        ag.pos = ag.pos + ag.vel * params_.dt;
        break;
      case Action::kBrake:
        brake_step(ag.pos, ag.vel, params_.brake_decel, params_.dt);
        break;
    }
  }

  std::vector<bool> collided(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    if (state.agents[static_cast<std::size_t>(i)].done) continue;
    for (int j = i + 1; j < n; ++j) {
      if (state.agents[static_cast<std::size_t>(j)].done) continue;
      const double d = norm(out.next.agents[static_cast<std::size_t>(i)].pos -
                            out.next.agents[static_cast<std::size_t>(j)].pos);
      if (d < 2.0 * params_.radius) {
        ++out.collisions;
        collided[static_cast<std::size_t>(i)] = true;
        collided[static_cast<std::size_t>(j)] = true;
      }
    }
  }

  bool all_done = true;
  for (int i = 0; i < n; ++i) {
    auto& ag = out.next.agents[static_cast<std::size_t>(i)];
    if (state.agents[static_cast<std::size_t>(i)].done) continue;
    const double dist = norm(ag.pos - targets_[static_cast<std::size_t>(i)]);
    double r = -dist;
    if (collided[static_cast<std::size_t>(i)]) r += kCollisionPenalty;
    if (std::abs(ag.pos.x) > params_.bound || std::abs(ag.pos.y) > params_.bound)
      r += kCollisionPenalty;  // out-of-range penalty, same magnitude
    if (dist <= params_.target_eps && norm(ag.vel) == 0.0) ag.done = true;
    out.rewards[static_cast<std::size_t>(i)] = r;
    all_done = all_done && ag.done;
  }
  out.episode_done = all_done || out.next.step >= params_.step_limit;
  return out;
}

}  // namespace dynashield
