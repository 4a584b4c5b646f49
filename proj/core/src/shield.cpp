#include "dynashield/shield.hpp"

#include <algorithm>
#include <unordered_map>

#include "dynashield/dynamics_model.hpp"
#include "dynashield/errors.hpp"
#include "dynashield/safety_game.hpp"

namespace dynashield {

Shield::Shield(std::shared_ptr<ShieldCore> core, std::vector<int> agent_ids)
    : core_(std::move(core)), agent_ids_(std::move(agent_ids)) {
  if (agent_ids_.empty()) throw Error("a shield must monitor at least one agent");
  if (!std::is_sorted(agent_ids_.begin(), agent_ids_.end()))
    throw Error("monitored agent ids must be sorted");
  remaining_duration_ = core_->horizon();
  state_trace_.push_back(0);
}

std::uint32_t Shield::resolve_current(const AbstractLabel& observed, bool* fresh_mismatch) {
  if (fresh_mismatch) *fresh_mismatch = false;
  if (!has_pending_) {
    if (!(core_->node_label(node_) == observed)) {
      if (fresh_mismatch) *fresh_mismatch = true;
      return node_;
    }
    return node_;
  }
  const auto resolved = core_->resolve(node_, pending_action_, observed);
  if (!resolved) {
    if (fresh_mismatch) *fresh_mismatch = true;
    return node_;
  }
  return *resolved;
}

bool Shield::covers(const AbstractLabel& observed) {
  if (is_expired()) return false;
  bool mismatch = false;
  resolve_current(observed, &mismatch);
  return !mismatch;
}

FilterResult Shield::filter(const AbstractLabel& observed, const JointAction& proposed) {
  if (is_expired()) throw ExpiredShieldError("shield duration exhausted");
  bool mismatch = false;
  const std::uint32_t node = resolve_current(observed, &mismatch);
  if (mismatch)
    throw LabelMismatchError(
        "observed label is not among the shield's predicted states (model violation)");

  const int proposed_id = core_->action_space().encode(proposed);
  FilterResult result;
  result.corrected_flags.assign(static_cast<std::size_t>(proposed.size), false);
  if (core_->action_safe(node, proposed_id)) {
    result.corrected = proposed;  // minimal interference
    return result;
  }
  const auto fallback = core_->fallback_action(node);
  if (!fallback)
    throw Error("no safe action exists from a winning shield state; synthesis invariant broken");
  result.corrected = core_->action_space().decode(*fallback);
  for (int i = 0; i < proposed.size; ++i)
    result.corrected_flags[static_cast<std::size_t>(i)] = result.corrected[i] != proposed[i];
  return result;
}

FilterResult Shield::filter_restricted(const AbstractLabel& observed, const JointAction& proposed,
                                       const std::function<bool(const JointAction&)>& allowed) {
  if (is_expired()) throw ExpiredShieldError("shield duration exhausted");
  bool mismatch = false;
  const std::uint32_t node = resolve_current(observed, &mismatch);
  if (mismatch)
    throw LabelMismatchError(
        "observed label is not among the shield's predicted states (model violation)");

  FilterResult result;
  result.corrected_flags.assign(static_cast<std::size_t>(proposed.size), false);
  const int proposed_id = core_->action_space().encode(proposed);
  if (allowed(proposed) && core_->action_safe(node, proposed_id)) {
    result.corrected = proposed;
    return result;
  }
  for (int a = 0; a < core_->action_space().count(); ++a) {
    const JointAction candidate = core_->action_space().decode(a);
    if (!allowed(candidate)) continue;
    if (!core_->action_safe(node, a)) continue;
    result.corrected = candidate;
    for (int i = 0; i < proposed.size; ++i)
      result.corrected_flags[static_cast<std::size_t>(i)] = candidate[i] != proposed[i];
    return result;
  }
  throw UnsafeStartError("no safe action within the allowed set; restriction too tight");
}

void Shield::advance(const AbstractLabel& observed, const JointAction& executed) {
  if (is_expired()) throw ExpiredShieldError("shield duration exhausted");
  bool mismatch = false;
  const std::uint32_t node = resolve_current(observed, &mismatch);
  if (mismatch)
    throw LabelMismatchError(
        "observed label is not among the shield's predicted states (model violation)");
  node_ = node;
  if (state_trace_.empty() || state_trace_.back() != node_) state_trace_.push_back(node_);
  has_pending_ = true;
  pending_action_ = core_->action_space().encode(executed);
  --remaining_duration_;
}

// ── Lazy core ────────────────────────────────────────────────────────────

namespace {

struct LazyKey {
  std::uint64_t hi, lo;
  StateId q;
  int t;
  bool operator==(const LazyKey&) const = default;
};

struct LazyKeyHash {
  std::size_t operator()(const LazyKey& k) const {
    std::uint64_t h = k.hi * 0x9E3779B97F4A7C15ull;
    h ^= k.lo + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= (static_cast<std::uint64_t>(k.q) << 32) ^ static_cast<std::uint64_t>(k.t);
    return static_cast<std::size_t>(h * 0xC2B2AE3D27D4EB4Full);
  }
};

class LazyCore final : public ShieldCore {
 public:
  LazyCore(const DynamicsModel& model, const Dfa& spec, const PropositionAlphabet& alphabet,
           const AbstractLabel& root, const JointActionSpace& actions,
           const SynthesisOptions& options)
      : model_(&model),
        spec_(&spec),
        alphabet_(alphabet),
        actions_(actions),
        options_(options) {
    const StateId q0 = spec_->step(spec_->initial, letter_for_label(root, alphabet_));
    intern(root, q0, 0);
  }

  const AbstractLabel& node_label(std::uint32_t node) const override {
    return nodes_[node].label;
  }
  int node_time(std::uint32_t node) const override { return nodes_[node].t; }

  bool node_winning(std::uint32_t node) override { return winning(node); }

  bool action_safe(std::uint32_t node, int action) override {
    if (nodes_[node].t >= options_.k) return false;
    for (const std::uint32_t succ : successor_ids(node, action))
      if (!winning(succ)) return false;
    return true;
  }

  std::optional<int> fallback_action(std::uint32_t node) override {
    // No references into nodes_ may be held across action_safe: interning
    // new states reallocates the table.
    if (nodes_[node].fallback == kFallbackUnknown) {
      int found = kFallbackNone;
      for (int a = 0; a < actions_.count(); ++a) {
        if (action_safe(node, a)) {
          found = a;
          break;
        }
      }
      nodes_[node].fallback = found;
    }
    const int cached = nodes_[node].fallback;
    return cached == kFallbackNone ? std::nullopt : std::optional<int>(cached);
  }

  std::optional<std::uint32_t> resolve(std::uint32_t node, int action,
                                       const AbstractLabel& observed) override {
    if (nodes_[node].t >= options_.k) return std::nullopt;
    for (const std::uint32_t succ : successor_ids(node, action))
      if (nodes_[succ].label == observed) return succ;
    return std::nullopt;
  }

  const JointActionSpace& action_space() const override { return actions_; }
  int horizon() const override { return options_.k; }
  std::size_t state_count() const override { return nodes_.size(); }

 private:
  static constexpr int kFallbackUnknown = -2;
  static constexpr int kFallbackNone = -1;

  struct Node {
    AbstractLabel label;
    StateId q;
    int t;
    std::int8_t win = -1;  // -1 unknown, 0 losing, 1 winning
    int fallback = kFallbackUnknown;
  };

  std::uint32_t intern(const AbstractLabel& label, StateId q, int t) {
    const auto [hi, lo] = label.pack();
    const LazyKey key{hi, lo, q, t};
    const auto [it, inserted] = index_.emplace(key, static_cast<std::uint32_t>(nodes_.size()));
    if (inserted) {
      Node n;
      n.label = label;
      n.q = q;
      n.t = t;
      nodes_.push_back(std::move(n));
    }
    return it->second;
  }

  // Returned by value: callers recurse into winning(), which interns new
  // states and may reallocate the node table under any reference. The
  // per-(node, action) cache is a single map so untouched actions cost
  // nothing.
  std::vector<std::uint32_t> successor_ids(std::uint32_t node, int action) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(node) << 16) | static_cast<std::uint64_t>(action);
    const auto it = succs_.find(key);
    if (it != succs_.end()) return it->second;
    const AbstractLabel label = nodes_[node].label;
    const StateId q = nodes_[node].q;
    const int t = nodes_[node].t;
    const auto labels = model_->possible_successors(label, actions_.decode(action));
    if (labels.empty()) throw Error("dynamics model returned an empty successor set");
    std::vector<std::uint32_t> ids;
    ids.reserve(labels.size());
    for (const AbstractLabel& lbl : labels) {
      const StateId q2 = spec_->step(q, letter_for_label(lbl, alphabet_));
      ids.push_back(intern(lbl, q2, t + 1));
    }
    succs_.emplace(key, ids);
    return ids;
  }

  bool accepting(std::uint32_t node) const { return spec_->is_accepting(nodes_[node].q); }

  bool winning(std::uint32_t node) {
    if (nodes_[node].win >= 0) return nodes_[node].win == 1;
    bool result;
    if (!accepting(node)) {
      result = false;
    } else if (nodes_[node].t >= options_.k) {
      result = !options_.lookahead_margin || horizon_margin(node);
    } else {
      result = false;
      for (int a = 0; a < actions_.count() && !result; ++a) {
        bool all = true;
        for (const std::uint32_t succ : successor_ids(node, a)) {
          if (!winning(succ)) {
            all = false;
            break;
          }
        }
        result = all;
      }
    }
    nodes_[node].win = result ? 1 : 0;
    return result;
  }

  // Horizon escape hatch: one action whose resolutions all still satisfy
  // the spec one step past the horizon.
  bool horizon_margin(std::uint32_t node) {
    const Node& n = nodes_[node];
    for (int a = 0; a < actions_.count(); ++a) {
      const auto labels = model_->possible_successors(n.label, actions_.decode(a));
      bool all = !labels.empty();
      for (const AbstractLabel& lbl : labels) {
        if (!spec_->is_accepting(spec_->step(n.q, letter_for_label(lbl, alphabet_)))) {
          all = false;
          break;
        }
      }
      if (all) return true;
    }
    return false;
  }

  const DynamicsModel* model_;
  const Dfa* spec_;
  PropositionAlphabet alphabet_;
  JointActionSpace actions_;
  SynthesisOptions options_;
  std::vector<Node> nodes_;
  std::unordered_map<LazyKey, std::uint32_t, LazyKeyHash> index_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> succs_;
};

}  // namespace

std::shared_ptr<ShieldCore> make_lazy_core(const DynamicsModel& model, const Dfa& spec,
                                           const PropositionAlphabet& alphabet,
                                           const AbstractLabel& root,
                                           const JointActionSpace& actions,
                                           const SynthesisOptions& options) {
  return std::make_shared<LazyCore>(model, spec, alphabet, root, actions, options);
}

}  // namespace dynashield
