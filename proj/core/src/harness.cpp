#include "dynashield/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "dynashield/errors.hpp"
#include "dynashield/ltl.hpp"
#include "dynashield/monitor.hpp"
#include "dynashield/safety_game.hpp"

namespace dynashield {

double safety_rate(std::span<const int> per_step_collisions) {
  if (per_step_collisions.empty()) throw Error("safety_rate: empty step log");
  std::size_t colliding = 0;
  for (int c : per_step_collisions)
    if (c > 0) ++colliding;
  return 1.0 - static_cast<double>(colliding) / static_cast<double>(per_step_collisions.size());
}

// ── Factored baseline ───────────────────────────────────────────────────

FsCoordinator::FsCoordinator(const GridMap& map, ShieldFactory& factory, double unsafe_penalty,
                             int region_size)
    : map_(&map),
      factory_(&factory),
      penalty_(unsafe_penalty),
      region_size_(region_size),
      regions_x_((map.width() + region_size - 1) / region_size) {}

int FsCoordinator::region_of(Cell c) const {
  return (c.x / region_size_) + (c.y / region_size_) * regions_x_;
}

void FsCoordinator::reset_episode() { pool_.clear(); }

ShieldStepResult FsCoordinator::step(const JointState& state,
                                     const std::vector<Action>& proposed) {
  const int n = state.agent_count();
  if (static_cast<int>(proposed.size()) != n)
    throw Error("fs step: one proposal per agent required");
  const Abstraction& abs = factory_->abstraction();
  const int k = factory_->options().k;

  ShieldStepResult result;
  result.safe_actions = proposed;
  result.penalties.assign(static_cast<std::size_t>(n), 0.0);
  result.corrected.assign(static_cast<std::size_t>(n), false);

  std::vector<int> live;
  for (int i = 0; i < n; ++i) {
    if (state.agents[static_cast<std::size_t>(i)].done) {
      result.safe_actions[static_cast<std::size_t>(i)] = Action::kStay;
    } else {
      live.push_back(i);
    }
  }

  const auto cell_of = [&](int agent) { return state.agents[static_cast<std::size_t>(agent)].cell; };

  // Cross-border admission, in agent-id order. The destination region
  // judges an entrant without the source region's state: the entry cell
  // must lie outside every destination-region occupant's k-step reach
  // and must not conflict with previously admitted movers.
  std::vector<int> movers;          // admitted cross-border agents
  std::vector<Cell> mover_dests;
  for (int agent : live) {
    const Cell from = cell_of(agent);
    const Cell dest = map_->step_from(from, proposed[static_cast<std::size_t>(agent)]);
    if (dest == from) continue;
    if (region_of(dest) == region_of(from)) continue;
    bool admit = true;
    for (int other : live) {
      if (other == agent) continue;
      if (region_of(cell_of(other)) != region_of(dest)) continue;
      const Cell oc = cell_of(other);
      if (std::abs(oc.x - dest.x) + std::abs(oc.y - dest.y) <= k) {
        admit = false;
        break;
      }
    }
    for (std::size_t m = 0; m < movers.size() && admit; ++m) {
      const int other = movers[m];
      if (mover_dests[m] == dest) admit = false;                       // same entry cell
      if (mover_dests[m] == from && cell_of(other) == dest) admit = false;  // swap
    }
    if (admit) {
      movers.push_back(agent);
      mover_dests.push_back(dest);
    } else {
      // Conservative rejection: hold position, take the penalty.
      result.safe_actions[static_cast<std::size_t>(agent)] = Action::kStay;
      result.corrected[static_cast<std::size_t>(agent)] = true;
      result.penalties[static_cast<std::size_t>(agent)] = penalty_;
    }
  }

  // Remaining agents are grouped per region and filtered jointly with
  // corrections restricted to region-preserving actions.
  std::map<int, std::vector<int>> by_region;
  for (int agent : live) {
    if (std::find(movers.begin(), movers.end(), agent) != movers.end()) continue;
    by_region[region_of(cell_of(agent))].push_back(agent);
  }

  std::map<std::vector<int>, Shield> next_pool;
  for (auto& [region, group] : by_region) {
    const AbstractLabel label = abs.label_of(state, group);

    Shield* shield = nullptr;
    const auto it = pool_.find(group);
    if (it != pool_.end() && !it->second.is_expired()) {
      if (!it->second.covers(label))
        throw LabelMismatchError(
            "region shield's predictions do not cover the observed label (model violation)");
      auto node = pool_.extract(it);
      shield = &next_pool.insert(std::move(node)).position->second;
      ++result.reuses;
    } else {
      shield = &next_pool.emplace(group, factory_->recompute_shield(group, state)).first->second;
      ++result.recomputes;
      result.synthesis_states += factory_->last_synthesis_states();
    }

    JointAction ja;
    ja.size = static_cast<int>(group.size());
    for (std::size_t i = 0; i < group.size(); ++i)
      ja[static_cast<int>(i)] =
          result.safe_actions[static_cast<std::size_t>(group[i])];  // after demotions

    const auto region_preserving = [&](const JointAction& cand) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        const Cell from = cell_of(group[i]);
        const Cell to = map_->step_from(from, cand[static_cast<int>(i)]);
        if (region_of(to) != region_of(from)) return false;
      }
      return true;
    };

    const FilterResult fr = shield->filter_restricted(label, ja, region_preserving);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const int agent = group[i];
      result.safe_actions[static_cast<std::size_t>(agent)] = fr.corrected[static_cast<int>(i)];
      if (fr.corrected_flags[i]) {
        result.corrected[static_cast<std::size_t>(agent)] = true;
        result.penalties[static_cast<std::size_t>(agent)] = penalty_;
      }
    }
    shield->advance(label, fr.corrected);
  }
  pool_ = std::move(next_pool);
  return result;
}

// ── Experiment runner ───────────────────────────────────────────────────

namespace {

struct SpecFixture {
  LtlFormula formula;
  PropositionAlphabet alphabet;
  std::shared_ptr<const Dfa> monitor;
};

SpecFixture build_spec(const std::string& text) {
  LtlFormula f = parse_ltl(text);
  if (!is_safety_fragment(f))
    throw ConfigError("safety_spec is outside the supported safety fragment: " + text);
  const auto atoms = f.atoms();
  for (const auto& a : atoms)
    if (a != "collision" && a != "out_of_bounds" && a != "at_obstacle")
      throw ConfigError("safety_spec proposition '" + a +
                        "' is not derivable from environment labels");
  // The alphabet must contain at least one proposition to index letters.
  std::vector<std::string> names = atoms.empty() ? std::vector<std::string>{"collision"} : atoms;
  PropositionAlphabet alphabet(names);
  auto monitor = std::make_shared<const Dfa>(to_monitor_dfa(f, alphabet));
  return {std::move(f), std::move(alphabet), std::move(monitor)};
}

std::string format_double(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// synthesis_ms reports a deterministic cost estimate (explored game
// states at a nominal 1000 states/ms) so metrics stay byte-reproducible;
// wall-clock timings go to the event log instead.
std::string synthesis_ms_estimate(std::size_t states) {
  return format_double(static_cast<double>(states) / 1000.0, "%.3f");
}

struct SeedOutcome {
  std::vector<EpisodeRow> rows;
  SeedSummary summary;
};

struct GridFixtures {
  std::unique_ptr<GridMap> map;  // stable address: abstraction and model point into it
  Abstraction abstraction;
  std::unique_ptr<DynamicsModel> model;
  std::unique_ptr<ShieldFactory> factory;
};

// Builds the per-seed model (pretraining a learned model from random
// rollouts when asked) and the shield factory around it.
GridFixtures make_grid_fixtures(const ExperimentConfig& cfg, const SpecFixture& spec,
                                unsigned seed, const std::filesystem::path& seed_dir,
                                bool write_rollouts) {
  GridFixtures fx;
  fx.map = std::make_unique<GridMap>(GridMap::load(cfg.map_file));
  fx.abstraction = Abstraction{fx.map.get(), cfg.cell_width};

  if (cfg.model == ModelKind::kExact) {
    fx.model = std::make_unique<ExactGridModel>(*fx.map, fx.abstraction);
  } else {
    auto learned = std::make_unique<LearnedTabularModel>(*fx.map, fx.abstraction, cfg.n_min,
                                                         cfg.pessimistic_completion);
    // Random rollouts from random starts, fixed derived stream.
    std::mt19937 rng(seed * 2654435761u + 17u);
    GridEnv rollout_env(*fx.map, cfg.resolved_step_limit(), /*random_starts=*/true);
    std::ofstream rollout_csv;
    if (write_rollouts) {
      rollout_csv.open(seed_dir / "rollouts.csv");
      rollout_csv << "episode,step,agent_id,cell_x,cell_y,action,next_x,next_y\n";
    }
    int steps_done = 0, episode = 0;
    while (steps_done < cfg.model_rollout_steps) {
      JointState s = rollout_env.reset(rng);
      bool done = false;
      int step = 0;
      while (!done && steps_done < cfg.model_rollout_steps) {
        std::vector<Action> acts;
        for (int i = 0; i < s.agent_count(); ++i)
          acts.push_back(static_cast<Action>(std::uniform_int_distribution<int>(0, 4)(rng)));
        const StepOutcome out = rollout_env.step(s, acts);
        for (int i = 0; i < s.agent_count(); ++i) {
          if (s.agents[static_cast<std::size_t>(i)].done) continue;
          const Cell from = s.agents[static_cast<std::size_t>(i)].cell;
          const Cell to = out.next.agents[static_cast<std::size_t>(i)].cell;
          learned->observe_cell(from, acts[static_cast<std::size_t>(i)], to);
          if (write_rollouts)
            rollout_csv << episode << "," << step << "," << i << "," << from.x << "," << from.y
                        << "," << action_name(acts[static_cast<std::size_t>(i)]) << "," << to.x
                        << "," << to.y << "\n";
        }
        ++steps_done;
        ++step;
        s = out.next;
        done = out.episode_done;
      }
      ++episode;
    }
    fx.model = std::move(learned);
  }

  fx.factory = std::make_unique<ShieldFactory>(
      *fx.model, spec.monitor, spec.alphabet, fx.abstraction, kGridActionCount,
      SynthesisOptions{cfg.k, cfg.max_group_size, cfg.lookahead_margin});
  return fx;
}

SeedOutcome run_grid_seed(const ExperimentConfig& cfg, const SpecFixture& spec, unsigned seed,
                          ShieldAlgorithm algorithm, const std::filesystem::path& seed_dir,
                          const RunOptions& options) {
  std::filesystem::create_directories(seed_dir);
  GridFixtures fx = make_grid_fixtures(cfg, spec, seed, seed_dir, /*write_rollouts=*/true);
  GridEnv env(*fx.map, cfg.resolved_step_limit(), cfg.random_starts);
  const int n = fx.map->agent_count();

  IndependentQLearners learners(*fx.map, n, cfg.learner);
  DynamicShieldManager manager(*fx.factory, cfg.unsafe_penalty);
  FsCoordinator fs(*fx.map, *fx.factory, cfg.unsafe_penalty, cfg.fs_region_size);

  std::ofstream events;
  if (options.log_events) {
    events.open(seed_dir / "events.jsonl");
    manager.set_event_sink([&events](const StepEvent& e) {
      events << "{\"step\":" << e.step << ",\"groups\":[";
      for (std::size_t g = 0; g < e.groups.size(); ++g) {
        if (g) events << ",";
        events << "[";
        for (std::size_t i = 0; i < e.groups[g].size(); ++i) {
          if (i) events << ",";
          events << e.groups[g][i];
        }
        events << "]";
      }
      events << "],\"decisions\":[";
      for (std::size_t g = 0; g < e.decisions.size(); ++g) {
        if (g) events << ",";
        events << "\"" << e.decisions[g] << "\"";
      }
      events << "],\"corrected\":[";
      for (std::size_t i = 0; i < e.corrected_agents.size(); ++i) {
        if (i) events << ",";
        events << e.corrected_agents[i];
      }
      events << "],\"synthesis_states\":" << e.synthesis_states << ",\"synthesis_wall_ms\":"
             << format_double(e.synthesis_wall_ms, "%.3f") << "}\n";
    });
  }

  std::mt19937 rng(seed);
  SeedOutcome out;
  out.summary.seed = seed;
  out.summary.max_reward = -1e300;
  std::vector<int> step_collision_log;
  std::vector<int> episode_steps;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    JointState s = env.reset(rng);
    manager.reset_episode();
    fs.reset_episode();

    std::vector<double> agent_reward(static_cast<std::size_t>(n), 0.0);
    std::vector<int> agent_corrections(static_cast<std::size_t>(n), 0);
    int collisions = 0, recomputes = 0;
    std::size_t synth_states = 0;
    bool aborted = false;

    while (true) {
      const std::vector<Action> proposals = learners.select_actions(s, rng);
      ShieldStepResult sres;
      try {
        switch (algorithm) {
          case ShieldAlgorithm::kDynamic:
            sres = manager.shield_step(s, proposals);
            break;
          case ShieldAlgorithm::kFactored:
            sres = fs.step(s, proposals);
            break;
          case ShieldAlgorithm::kNone:
            sres.safe_actions = proposals;
            sres.penalties.assign(static_cast<std::size_t>(n), 0.0);
            sres.corrected.assign(static_cast<std::size_t>(n), false);
            for (int i = 0; i < n; ++i)
              if (s.agents[static_cast<std::size_t>(i)].done)
                sres.safe_actions[static_cast<std::size_t>(i)] = Action::kStay;
            break;
        }
      } catch (const UnsafeStartError&) {
        ++out.summary.unsafe_starts;
        aborted = true;
        break;
      } catch (const LabelMismatchError&) {
        ++out.summary.label_mismatches;
        aborted = true;
        break;
      }

      recomputes += sres.recomputes;
      synth_states += sres.synthesis_states;

      const StepOutcome env_out = env.step(s, sres.safe_actions);
      collisions += env_out.collisions;
      step_collision_log.push_back(env_out.collisions);

      for (int i = 0; i < n; ++i) {
        const auto& ag = s.agents[static_cast<std::size_t>(i)];
        if (ag.done) continue;
        agent_reward[static_cast<std::size_t>(i)] += env_out.rewards[static_cast<std::size_t>(i)];
        if (sres.corrected[static_cast<std::size_t>(i)])
          ++agent_corrections[static_cast<std::size_t>(i)];
        learners.learn_step(i, ag.cell, proposals[static_cast<std::size_t>(i)],
                            sres.safe_actions[static_cast<std::size_t>(i)],
                            env_out.rewards[static_cast<std::size_t>(i)],
                            sres.penalties[static_cast<std::size_t>(i)],
                            env_out.next.agents[static_cast<std::size_t>(i)].cell,
                            env_out.next.agents[static_cast<std::size_t>(i)].done);
      }

      s = env_out.next;
      if (env_out.episode_done) break;
    }

    learners.decay_epsilon();
    const int steps = s.step;
    episode_steps.push_back(aborted ? cfg.resolved_step_limit() : steps);

    double team_reward = 0.0;
    for (double r : agent_reward) team_reward += r;
    out.summary.max_reward = std::max(out.summary.max_reward, team_reward);
    out.summary.total_collisions += collisions;
    for (int c : agent_corrections) out.summary.total_corrections += c;
    out.summary.total_recomputes += recomputes;

    for (int i = 0; i < n; ++i) {
      EpisodeRow row;
      row.episode = episode;
      row.seed = seed;
      row.agent_id = i;
      row.reward = agent_reward[static_cast<std::size_t>(i)];
      row.collisions = collisions;
      row.steps = episode_steps.back();
      row.corrections = agent_corrections[static_cast<std::size_t>(i)];
      row.recomputes = recomputes;
      row.synthesis_states = synth_states;
      out.rows.push_back(row);
    }
  }

  // Converged-steps statistics over the last 10% of episodes.
  const std::size_t tail = std::max<std::size_t>(1, episode_steps.size() / 10);
  double sum = 0.0;
  int min_steps = cfg.resolved_step_limit();
  for (std::size_t i = episode_steps.size() - tail; i < episode_steps.size(); ++i) {
    sum += episode_steps[i];
    min_steps = std::min(min_steps, episode_steps[i]);
  }
  out.summary.mean_steps_last10 = sum / static_cast<double>(tail);
  out.summary.min_steps_last10 = min_steps;
  out.summary.train_safety_rate =
      step_collision_log.empty() ? 1.0 : safety_rate(step_collision_log);

  learners.save(seed_dir);
  return out;
}

// Particle variant: tabular learners over the discretized lattice, shields
// from the conservative reach model. Factored shielding is rejected here:
// the unbounded state space admits no a-priori region factorization.
SeedOutcome run_particle_seed(const ExperimentConfig& cfg, const SpecFixture& spec, unsigned seed,
                              ShieldAlgorithm algorithm, const std::filesystem::path& seed_dir) {
  if (algorithm == ShieldAlgorithm::kFactored)
    throw ConfigError("factored shielding requires the grid environment; "
                      "the particle state space cannot be factored in advance");
  if (cfg.model == ModelKind::kLearned)
    throw ConfigError("the learned tabular model is grid-only; particle uses the reach model");
  std::filesystem::create_directories(seed_dir);

  ParticleParams params;
  params.agent_count = cfg.particle_agents;
  params.step_limit = cfg.resolved_step_limit();
  ParticleEnv env(params);

  const Abstraction abstraction{nullptr, cfg.cell_width};
  ParticleReachModel model(abstraction);
  ShieldFactory factory(model, spec.monitor, spec.alphabet, abstraction, kParticleActionCount,
                        SynthesisOptions{cfg.k, cfg.max_group_size, cfg.lookahead_margin});
  DynamicShieldManager manager(factory, cfg.unsafe_penalty);

  // Q-learning over lattice cells: the bounded arena maps onto a virtual
  // grid with an offset.
  const int half = static_cast<int>(std::ceil(params.bound / cfg.cell_width)) + 3;
  const int side = 2 * half + 1;
  GridMap lattice(side, side, {}, {{0, 0}}, {{0, 0}});
  const auto to_lattice = [&](const AgentAbs& a) {
    return Cell{std::clamp(a.x + half, 0, side - 1), std::clamp(a.y + half, 0, side - 1)};
  };

  IndependentQLearners learners(lattice, params.agent_count, cfg.learner, kParticleActionCount);
  std::mt19937 rng(seed);

  SeedOutcome out;
  out.summary.seed = seed;
  out.summary.max_reward = -1e300;
  std::vector<int> step_collision_log;
  std::vector<int> episode_steps;
  const int n = params.agent_count;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    JointState s = env.reset(rng);
    manager.reset_episode();
    std::vector<double> agent_reward(static_cast<std::size_t>(n), 0.0);
    std::vector<int> agent_corrections(static_cast<std::size_t>(n), 0);
    int collisions = 0, recomputes = 0;
    std::size_t synth_states = 0;
    bool aborted = false;

    while (true) {
      // Epsilon-greedy over the lattice projection of each agent.
      JointState projected = s;
      for (auto& ag : projected.agents) ag.cell = to_lattice(abstraction.agent_abs(ag));
      const std::vector<Action> proposals = learners.select_actions(projected, rng);

      ShieldStepResult sres;
      try {
        if (algorithm == ShieldAlgorithm::kDynamic) {
          sres = manager.shield_step(s, proposals);
        } else {
          sres.safe_actions = proposals;
          sres.penalties.assign(static_cast<std::size_t>(n), 0.0);
          sres.corrected.assign(static_cast<std::size_t>(n), false);
        }
      } catch (const UnsafeStartError&) {
        ++out.summary.unsafe_starts;
        aborted = true;
        break;
      } catch (const LabelMismatchError&) {
        ++out.summary.label_mismatches;
        aborted = true;
        break;
      }

      recomputes += sres.recomputes;
      synth_states += sres.synthesis_states;
      const StepOutcome env_out = env.step(s, sres.safe_actions);
      collisions += env_out.collisions;
      step_collision_log.push_back(env_out.collisions);

      for (int i = 0; i < n; ++i) {
        const auto& ag = s.agents[static_cast<std::size_t>(i)];
        if (ag.done) continue;
        agent_reward[static_cast<std::size_t>(i)] += env_out.rewards[static_cast<std::size_t>(i)];
        if (sres.corrected[static_cast<std::size_t>(i)])
          ++agent_corrections[static_cast<std::size_t>(i)];
        learners.learn_step(i, to_lattice(abstraction.agent_abs(ag)),
                            proposals[static_cast<std::size_t>(i)],
                            sres.safe_actions[static_cast<std::size_t>(i)],
                            env_out.rewards[static_cast<std::size_t>(i)],
                            sres.penalties[static_cast<std::size_t>(i)],
                            to_lattice(abstraction.agent_abs(
                                env_out.next.agents[static_cast<std::size_t>(i)])),
                            env_out.next.agents[static_cast<std::size_t>(i)].done);
      }
      s = env_out.next;
      if (env_out.episode_done) break;
    }

    learners.decay_epsilon();
    episode_steps.push_back(aborted ? cfg.resolved_step_limit() : s.step);
    double team_reward = 0.0;
    for (double r : agent_reward) team_reward += r;
    out.summary.max_reward = std::max(out.summary.max_reward, team_reward);
    out.summary.total_collisions += collisions;
    for (int c : agent_corrections) out.summary.total_corrections += c;
    out.summary.total_recomputes += recomputes;

    for (int i = 0; i < n; ++i) {
      EpisodeRow row;
      row.episode = episode;
      row.seed = seed;
      row.agent_id = i;
      row.reward = agent_reward[static_cast<std::size_t>(i)];
      row.collisions = collisions;
      row.steps = episode_steps.back();
      row.corrections = agent_corrections[static_cast<std::size_t>(i)];
      row.recomputes = recomputes;
      row.synthesis_states = synth_states;
      out.rows.push_back(row);
    }
  }

  const std::size_t tail = std::max<std::size_t>(1, episode_steps.size() / 10);
  double sum = 0.0;
  int min_steps = cfg.resolved_step_limit();
  for (std::size_t i = episode_steps.size() - tail; i < episode_steps.size(); ++i) {
    sum += episode_steps[i];
    min_steps = std::min(min_steps, episode_steps[i]);
  }
  out.summary.mean_steps_last10 = sum / static_cast<double>(tail);
  out.summary.min_steps_last10 = min_steps;
  out.summary.train_safety_rate =
      step_collision_log.empty() ? 1.0 : safety_rate(step_collision_log);
  learners.save(seed_dir);
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpisodeRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "episode,seed,agent_id,reward,collisions,steps,corrections,recomputes,synthesis_ms\n";
  for (const EpisodeRow& r : rows) {
    out << r.episode << "," << r.seed << "," << r.agent_id << "," << format_double(r.reward)
        << "," << r.collisions << "," << r.steps << "," << r.corrections << "," << r.recomputes
        << "," << synthesis_ms_estimate(r.synthesis_states) << "\n";
  }
}

void write_summary_csv(const std::filesystem::path& path, const RunSummary& summary) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "seed,max_reward,total_collisions,mean_steps_last10,min_steps_last10,"
         "total_corrections,total_recomputes,unsafe_starts,label_mismatches,train_safety_rate\n";
  const auto emit = [&](const std::string& tag, const SeedSummary& s) {
    out << tag << "," << format_double(s.max_reward) << "," << s.total_collisions << ","
        << format_double(s.mean_steps_last10) << "," << s.min_steps_last10 << ","
        << s.total_corrections << "," << s.total_recomputes << "," << s.unsafe_starts << ","
        << s.label_mismatches << "," << format_double(s.train_safety_rate) << "\n";
  };
  for (const SeedSummary& s : summary.per_seed) emit(std::to_string(s.seed), s);

  // Cross-seed mean and stddev rows.
  const auto stat = [&](auto getter) {
    double mean = 0.0;
    for (const auto& s : summary.per_seed) mean += static_cast<double>(getter(s));
    mean /= static_cast<double>(summary.per_seed.size());
    double var = 0.0;
    for (const auto& s : summary.per_seed) {
      const double d = static_cast<double>(getter(s)) - mean;
      var += d * d;
    }
    var /= static_cast<double>(summary.per_seed.size());
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  const auto [mr, sr] = stat([](const SeedSummary& s) { return s.max_reward; });
  const auto [mc, sc] = stat([](const SeedSummary& s) { return s.total_collisions; });
  const auto [ms, ss] = stat([](const SeedSummary& s) { return s.mean_steps_last10; });
  const auto [mms, sms] = stat([](const SeedSummary& s) { return s.min_steps_last10; });
  const auto [mcor, scor] = stat([](const SeedSummary& s) { return s.total_corrections; });
  const auto [mrec, srec] = stat([](const SeedSummary& s) { return s.total_recomputes; });
  const auto [mu, su] = stat([](const SeedSummary& s) { return s.unsafe_starts; });
  const auto [ml, sl] = stat([](const SeedSummary& s) { return s.label_mismatches; });
  const auto [msr, ssr] = stat([](const SeedSummary& s) { return s.train_safety_rate; });
  out << "mean," << format_double(mr) << "," << format_double(mc) << "," << format_double(ms)
      << "," << format_double(mms) << "," << format_double(mcor) << "," << format_double(mrec)
      << "," << format_double(mu) << "," << format_double(ml) << "," << format_double(msr)
      << "\n";
  out << "stddev," << format_double(sr) << "," << format_double(sc) << "," << format_double(ss)
      << "," << format_double(sms) << "," << format_double(scor) << "," << format_double(srec)
      << "," << format_double(su) << "," << format_double(sl) << "," << format_double(ssr)
      << "\n";
}

void dump_debug_artifacts(const ExperimentConfig& cfg, const SpecFixture& spec,
                          const RunOptions& options) {
  if (options.dump_automata) {
    std::ofstream out(options.out_dir / "spec_monitor.dot");
    out << to_dot(*spec.monitor, "spec_monitor");
  }
  if (options.dump_game && cfg.env == EnvKind::kGrid) {
    // Explicit game for the full agent set at the reset state; guarded so
    // a debugging aid cannot eat the machine on big merges.
    const GridMap map = GridMap::load(cfg.map_file);
    const Abstraction abstraction{&map, cfg.cell_width};
    const ExactGridModel model(map, abstraction);
    JointState s;
    for (Cell c : map.starts()) {
      AgentState a;
      a.cell = c;
      s.agents.push_back(a);
    }
    std::vector<int> all;
    for (int i = 0; i < map.agent_count(); ++i) all.push_back(i);
    const AbstractLabel root = abstraction.label_of(s, all);
    const JointActionSpace actions{kGridActionCount, root.size};
    auto unrolling = std::make_shared<const EnvUnrolling>(
        unroll(model, root, cfg.k, actions, cfg.max_group_size));
    if (unrolling->node_count() > 200000) {
      std::ofstream out(options.out_dir / "game0.json");
      out << "{\"error\": \"game too large to dump (" << unrolling->node_count()
          << " unrolling nodes)\"}\n";
      return;
    }
    const SafetyGame game = build_game(unrolling, spec.monitor, spec.alphabet);
    const WinningRegion w = winning_region(game);
    std::ofstream out(options.out_dir / "game0.json");
    out << game_to_json(game, w);
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const SpecFixture spec = build_spec(cfg.safety_spec);
  std::filesystem::create_directories(options.out_dir);
  const ShieldAlgorithm algorithm = options.algorithm_override.value_or(cfg.algorithm);
  std::vector<unsigned> seeds = cfg.seeds;
  if (options.seed_override) seeds = {*options.seed_override};

  dump_debug_artifacts(cfg, spec, options);

  RunSummary summary;
  std::vector<EpisodeRow> rows;
  for (unsigned seed : seeds) {
    const auto seed_dir = options.out_dir / ("seed" + std::to_string(seed));
    SeedOutcome outcome = cfg.env == EnvKind::kGrid
                              ? run_grid_seed(cfg, spec, seed, algorithm, seed_dir, options)
                              : run_particle_seed(cfg, spec, seed, algorithm, seed_dir);
    rows.insert(rows.end(), outcome.rows.begin(), outcome.rows.end());
    summary.per_seed.push_back(outcome.summary);
    summary.total_collisions += outcome.summary.total_collisions;
    summary.unsafe_starts += outcome.summary.unsafe_starts;
    summary.label_mismatches += outcome.summary.label_mismatches;
  }

  double mr = 0.0, msteps = 0.0;
  for (const auto& s : summary.per_seed) {
    mr += s.max_reward;
    msteps += s.mean_steps_last10;
  }
  summary.mean_max_reward = mr / static_cast<double>(summary.per_seed.size());
  summary.mean_steps_last10 = msteps / static_cast<double>(summary.per_seed.size());

  write_metrics_csv(options.out_dir / "metrics.csv", rows);
  write_summary_csv(options.out_dir / "summary.csv", summary);
  return summary;
}

EvalSummary evaluate_greedy(const ExperimentConfig& cfg, const std::filesystem::path& qtables_dir,
                            const RunOptions& options) {
  if (cfg.env != EnvKind::kGrid)
    throw ConfigError("greedy evaluation supports the grid environment");
  const SpecFixture spec = build_spec(cfg.safety_spec);
  const ShieldAlgorithm algorithm = options.algorithm_override.value_or(cfg.algorithm);
  std::vector<unsigned> seeds = cfg.seeds;
  if (options.seed_override) seeds = {*options.seed_override};

  EvalSummary agg;
  std::vector<int> step_collision_log;
  double reward_sum = 0.0, steps_sum = 0.0;
  int episode_count = 0;

  for (unsigned seed : seeds) {
    const auto seed_dir = qtables_dir / ("seed" + std::to_string(seed));
    GridFixtures fx = make_grid_fixtures(cfg, spec, seed, seed_dir, /*write_rollouts=*/false);
    GridEnv env(*fx.map, cfg.resolved_step_limit(), cfg.random_starts);
    const int n = fx.map->agent_count();
    IndependentQLearners learners(*fx.map, n, cfg.learner);
    learners.load(seed_dir);
    learners.set_epsilon(0.0);
    DynamicShieldManager manager(*fx.factory, cfg.unsafe_penalty);
    FsCoordinator fs(*fx.map, *fx.factory, cfg.unsafe_penalty, cfg.fs_region_size);

    std::mt19937 rng(seed + 1000003u);
    for (int episode = 0; episode < cfg.eval_episodes; ++episode) {
      JointState s = env.reset(rng);
      manager.reset_episode();
      fs.reset_episode();
      double team = 0.0;
      while (true) {
        const std::vector<Action> proposals = learners.select_actions(s, rng);
        ShieldStepResult sres;
        switch (algorithm) {
          case ShieldAlgorithm::kDynamic:
            sres = manager.shield_step(s, proposals);
            break;
          case ShieldAlgorithm::kFactored:
            sres = fs.step(s, proposals);
            break;
          case ShieldAlgorithm::kNone:
            sres.safe_actions = proposals;
            for (int i = 0; i < n; ++i)
              if (s.agents[static_cast<std::size_t>(i)].done)
                sres.safe_actions[static_cast<std::size_t>(i)] = Action::kStay;
            break;
        }
        const StepOutcome out = env.step(s, sres.safe_actions);
        step_collision_log.push_back(out.collisions);
        agg.total_collisions += out.collisions;
        for (double r : out.rewards) team += r;
        s = out.next;
        if (out.episode_done) break;
      }
      reward_sum += team;
      steps_sum += s.step;
      ++episode_count;
    }
  }

  agg.mean_reward = reward_sum / std::max(1, episode_count);
  agg.mean_steps = steps_sum / std::max(1, episode_count);
  agg.safety_rate = step_collision_log.empty() ? 1.0 : safety_rate(step_collision_log);
  return agg;
}

}  // namespace dynashield
