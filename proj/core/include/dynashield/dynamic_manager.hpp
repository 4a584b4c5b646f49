#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynashield/abstraction.hpp"
#include "dynashield/dynamics_model.hpp"
#include "dynashield/envs.hpp"
#include "dynashield/shield.hpp"

namespace dynashield {

// Partition of the non-done agents into monitoring groups. Each group is
// sorted; groups are ordered by their first member.
struct ClusterAssignment {
  std::vector<std::vector<int>> groups;
};

// Groups agents whose k-step reachable cells can intersect: union-find
// over pairs at abstract-cell Chebyshev distance <= 2k. The proposals are
// accepted for interface parity with the per-step call but the rule is
// position-only. Done agents are not clustered (they sit on their targets
// and cannot collide).
ClusterAssignment cluster_agents(const JointState& state, const std::vector<Action>& proposals,
                                 int k, const Abstraction& abstraction);

// Synthesizes shields on demand and caches immutable cores by (group
// cells, horizon, model version), so regrouping over a recurring
// configuration reuses the explored game instead of re-deriving it.
class ShieldFactory {
 public:
  ShieldFactory(const DynamicsModel& model, std::shared_ptr<const Dfa> spec,
                PropositionAlphabet alphabet, Abstraction abstraction, int per_agent_actions,
                SynthesisOptions options);

  // abstract -> unroll -> game -> winning region -> shield, demand-driven.
  // Throws UnsafeStartError when the group admits no k-step-safe strategy
  // and GroupTooLargeError past max_group_size.
  Shield recompute_shield(const std::vector<int>& group, const JointState& state);

  const SynthesisOptions& options() const { return options_; }
  const Abstraction& abstraction() const { return abstraction_; }
  const PropositionAlphabet& alphabet() const { return alphabet_; }
  const Dfa& spec() const { return *spec_; }
  const DynamicsModel& model() const { return *model_; }

  // States newly materialized by the most recent recompute_shield call.
  std::size_t last_synthesis_states() const { return last_synthesis_states_; }

  std::size_t cache_size() const { return cache_.size(); }

 private:
  static constexpr std::size_t kCacheCapacity = 40000;
  struct CacheKey {
    std::vector<std::int32_t> cells;
    std::uint64_t model_version;
    bool operator==(const CacheKey&) const = default;
  };
  struct CacheKeyHash {
    std::size_t operator()(const CacheKey& k) const;
  };

  const DynamicsModel* model_;
  std::shared_ptr<const Dfa> spec_;
  PropositionAlphabet alphabet_;
  Abstraction abstraction_;
  int per_agent_actions_;
  SynthesisOptions options_;
  std::unordered_map<CacheKey, std::shared_ptr<ShieldCore>, CacheKeyHash> cache_;
  std::size_t last_synthesis_states_ = 0;
};

enum class PlanAction : std::uint8_t { kReuse, kRecompute };

struct GroupPlan {
  std::vector<int> group;
  PlanAction action;
};

// Matches clusters against the live pool: a group reuses a shield iff one
// exists with the identical signature, is not expired, and its prediction
// covers the group's current label. New merges, splits, and expiries
// recompute. A signature-matched live shield whose prediction fails to
// cover the observed label is a model violation and throws
// LabelMismatchError loudly instead of silently recomputing.
std::vector<GroupPlan> reconcile(std::map<std::vector<int>, Shield>& pool,
                                 const ClusterAssignment& clusters,
                                 const std::vector<AbstractLabel>& group_labels);

// One shielding step (Algorithm-1 shape: cluster, reconcile/recompute,
// filter concurrently, penalize corrected proposals).
struct ShieldStepResult {
  std::vector<Action> safe_actions;   // per agent
  std::vector<double> penalties;      // per agent, `unsafe_penalty` when corrected
  std::vector<bool> corrected;        // per agent
  int recomputes = 0;
  int reuses = 0;
  std::size_t synthesis_states = 0;
  double synthesis_wall_ms = 0.0;
};

struct StepEvent {
  int step = 0;
  std::vector<std::vector<int>> groups;
  std::vector<std::string> decisions;  // "reuse" / "recompute", aligned with groups
  std::vector<int> corrected_agents;
  std::size_t synthesis_states = 0;
  double synthesis_wall_ms = 0.0;
};

// Owns the live shield pool across one episode.
class DynamicShieldManager {
 public:
  DynamicShieldManager(ShieldFactory& factory, double unsafe_penalty)
      : factory_(&factory), penalty_(unsafe_penalty) {}

  ShieldStepResult shield_step(const JointState& state, const std::vector<Action>& proposed);

  // Drops all live shields (start of an episode). The factory cache and
  // its explored games survive.
  void reset_episode();

  const std::map<std::vector<int>, Shield>& pool() const { return pool_; }

  void set_event_sink(std::function<void(const StepEvent&)> sink) { sink_ = std::move(sink); }

 private:
  ShieldFactory* factory_;
  double penalty_;
  int step_index_ = 0;
  std::map<std::vector<int>, Shield> pool_;
  std::function<void(const StepEvent&)> sink_;
};

}  // namespace dynashield
