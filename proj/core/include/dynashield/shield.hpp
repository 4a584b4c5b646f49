#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dynashield/abstraction.hpp"
#include "dynashield/action.hpp"
#include "dynashield/dfa.hpp"
#include "dynashield/monitor.hpp"

namespace dynashield {

class DynamicsModel;

// Knobs of k-step shield synthesis.
struct SynthesisOptions {
  int k = 2;
  int max_group_size = 4;
  // When set, horizon states additionally need one action whose
  // resolutions all keep the specification satisfied one step further.
  // Off by default: the horizon rule then matches the plain k-step game.
  bool lookahead_margin = false;
};

// Behavioral core of a synthesized shield: winning verdicts, per-action
// safety, the default correction, and resolution of model nondeterminism
// by observed label. Node 0 is always the root. Implementations may
// memoize internally, so the accessors are non-const; a core is used by
// one group at a time.
class ShieldCore {
 public:
  virtual ~ShieldCore() = default;

  virtual const AbstractLabel& node_label(std::uint32_t node) const = 0;
  virtual int node_time(std::uint32_t node) const = 0;
  virtual bool node_winning(std::uint32_t node) = 0;

  // True iff every environment resolution of `action` from `node` lands
  // in the winning region.
  virtual bool action_safe(std::uint32_t node, int action) = 0;

  // First safe action in the default order (conservative action first,
  // then lexicographic); nullopt when none exists.
  virtual std::optional<int> fallback_action(std::uint32_t node) = 0;

  // Successor of `node` under `action` whose label matches `observed`.
  virtual std::optional<std::uint32_t> resolve(std::uint32_t node, int action,
                                               const AbstractLabel& observed) = 0;

  virtual const JointActionSpace& action_space() const = 0;
  virtual int horizon() const = 0;

  // Number of distinct game states materialized so far (cost metric).
  virtual std::size_t state_count() const = 0;
};

struct FilterResult {
  JointAction corrected;
  std::vector<bool> corrected_flags;  // per agent, true when replaced

  bool any_corrected() const {
    for (bool f : corrected_flags)
      if (f) return true;
    return false;
  }
};

// A live shield: a synthesized reactive system plus lifecycle state. The
// shield resolves the previous step's model nondeterminism lazily, when
// the next observed label arrives.
class Shield {
 public:
  Shield(std::shared_ptr<ShieldCore> core, std::vector<int> agent_ids);

  const std::vector<int>& agent_ids() const { return agent_ids_; }
  int group_size() const { return static_cast<int>(agent_ids_.size()); }
  int remaining_duration() const { return remaining_duration_; }
  bool is_expired() const { return remaining_duration_ == 0; }
  ShieldCore& core() { return *core_; }

  // Can the observed label be reconciled with the shield's prediction?
  // Used by the manager's reuse decision; false on an expired shield.
  bool covers(const AbstractLabel& observed);

  // λ: returns the proposed action unchanged when all of its resolutions
  // stay winning, otherwise the first safe action in the default order.
  // Throws ExpiredShieldError / LabelMismatchError.
  FilterResult filter(const AbstractLabel& observed, const JointAction& proposed);

  // Like filter, but both the pass-through and the correction must also
  // satisfy `allowed` (The factored baseline restricts corrections to
  // region-preserving actions this way).
  FilterResult filter_restricted(const AbstractLabel& observed, const JointAction& proposed,
                                 const std::function<bool(const JointAction&)>& allowed);

  // δ: commits the executed action and burns one step of duration.
  void advance(const AbstractLabel& observed, const JointAction& executed);

  // Game-state trace visited so far (root plus each resolved state).
  const std::vector<std::uint32_t>& state_trace() const { return state_trace_; }

 private:
  std::uint32_t resolve_current(const AbstractLabel& observed, bool* fresh_mismatch) ;

  std::shared_ptr<ShieldCore> core_;
  std::vector<int> agent_ids_;  // sorted
  int remaining_duration_;
  std::uint32_t node_ = 0;
  bool has_pending_ = false;
  int pending_action_ = 0;
  std::vector<std::uint32_t> state_trace_;
};

// Demand-driven shield core: explores the k-step game from the root only
// as far as winning checks and corrections require, memoizing verdicts.
// Behaviorally identical to the explicit build_game/winning_region/
// extract_shield pipeline (cross-checked in tests), but its cost scales
// with the states actually touched instead of the full reachable game.
std::shared_ptr<ShieldCore> make_lazy_core(const DynamicsModel& model, const Dfa& spec,
                                           const PropositionAlphabet& alphabet,
                                           const AbstractLabel& root,
                                           const JointActionSpace& actions,
                                           const SynthesisOptions& options);

}  // namespace dynashield
