#include "dynashield/dynamic_manager.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "dynashield/errors.hpp"

namespace dynashield {

namespace {

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

ClusterAssignment cluster_agents(const JointState& state, const std::vector<Action>& proposals,
                                 int k, const Abstraction& abstraction) {
  (void)proposals;
  const int n = state.agent_count();
  std::vector<int> live;
  for (int i = 0; i < n; ++i)
    if (!state.agents[static_cast<std::size_t>(i)].done) live.push_back(i);

  std::vector<Cell> cells;
  cells.reserve(live.size());
  for (int id : live)
    cells.push_back(abstraction.agent_abs(state.agents[static_cast<std::size_t>(id)]).cell());

  UnionFind uf(static_cast<int>(live.size()));
  for (std::size_t i = 0; i < live.size(); ++i)
    for (std::size_t j = i + 1; j < live.size(); ++j)
      if (chebyshev(cells[i], cells[j]) <= 2 * k) uf.unite(static_cast<int>(i), static_cast<int>(j));

  std::map<int, std::vector<int>> by_root;
  for (std::size_t i = 0; i < live.size(); ++i)
    by_root[uf.find(static_cast<int>(i))].push_back(live[i]);

  ClusterAssignment out;
  for (auto& [root, group] : by_root) out.groups.push_back(std::move(group));
  return out;
}

std::size_t ShieldFactory::CacheKeyHash::operator()(const CacheKey& k) const {
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ k.model_version;
  for (std::int32_t c : k.cells) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)) + 0x9E3779B97F4A7C15ull +
         (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

ShieldFactory::ShieldFactory(const DynamicsModel& model, std::shared_ptr<const Dfa> spec,
                             PropositionAlphabet alphabet, Abstraction abstraction,
                             int per_agent_actions, SynthesisOptions options)
    : model_(&model),
      spec_(std::move(spec)),
      alphabet_(std::move(alphabet)),
      abstraction_(abstraction),
      per_agent_actions_(per_agent_actions),
      options_(options) {
  spec_->validate();
}

Shield ShieldFactory::recompute_shield(const std::vector<int>& group, const JointState& state) {
  if (static_cast<int>(group.size()) > options_.max_group_size)
    throw GroupTooLargeError("group of " + std::to_string(group.size()) +
                             " exceeds max_group_size " +
                             std::to_string(options_.max_group_size));
  const AbstractLabel root = abstraction_.label_of(state, group);

  CacheKey key;
  key.model_version = model_->version();
  for (int i = 0; i < root.size; ++i) {
    key.cells.push_back(root[i].x);
    key.cells.push_back(root[i].y);
    key.cells.push_back(root[i].vx);
    key.cells.push_back(root[i].vy);
  }

  std::shared_ptr<ShieldCore> core;
  const auto it = cache_.find(key);
  if (it != cache_.end()) {
    core = it->second;
    last_synthesis_states_ = 0;
  } else {
    const JointActionSpace actions{per_agent_actions_, root.size};
    core = make_lazy_core(*model_, *spec_, alphabet_, root, actions, options_);
    core->node_winning(0);  // force the root verdict now
    last_synthesis_states_ = core->state_count();
    // Bounded, deterministic eviction: drop everything when full. Long
    // exploration phases otherwise accumulate one explored core per
    // visited group configuration.
    if (cache_.size() >= kCacheCapacity) cache_.clear();
    cache_.emplace(std::move(key), core);
  }

  if (!core->node_winning(0))
    throw UnsafeStartError("group configuration admits no k-step-safe strategy");
  return Shield(core, group);
}

std::vector<GroupPlan> reconcile(std::map<std::vector<int>, Shield>& pool,
                                 const ClusterAssignment& clusters,
                                 const std::vector<AbstractLabel>& group_labels) {
  if (clusters.groups.size() != group_labels.size())
    throw Error("reconcile: one label per group required");
  std::vector<GroupPlan> plan;
  for (std::size_t g = 0; g < clusters.groups.size(); ++g) {
    const auto& group = clusters.groups[g];
    const auto it = pool.find(group);
    if (it == pool.end()) {
      plan.push_back({group, PlanAction::kRecompute});
      continue;
    }
    Shield& shield = it->second;
    if (shield.is_expired()) {
      plan.push_back({group, PlanAction::kRecompute});
      continue;
    }
    if (!shield.covers(group_labels[g]))
      throw LabelMismatchError(
          "live shield's predictions do not cover the observed group label (model violation)");
    plan.push_back({group, PlanAction::kReuse});
  }
  return plan;
}

ShieldStepResult DynamicShieldManager::shield_step(const JointState& state,
                                                   const std::vector<Action>& proposed) {
  const int n = state.agent_count();
  if (static_cast<int>(proposed.size()) != n)
    throw Error("shield_step: one proposal per agent required");
  const Abstraction& abs = factory_->abstraction();
  const int k = factory_->options().k;

  ShieldStepResult result;
  result.safe_actions = proposed;
  result.penalties.assign(static_cast<std::size_t>(n), 0.0);
  result.corrected.assign(static_cast<std::size_t>(n), false);

  // Done agents hold their targets regardless of the proposal.
  for (int i = 0; i < n; ++i)
    if (state.agents[static_cast<std::size_t>(i)].done)
      result.safe_actions[static_cast<std::size_t>(i)] = Action::kStay;

  const ClusterAssignment clusters = cluster_agents(state, proposed, k, abs);
  std::vector<AbstractLabel> labels;
  labels.reserve(clusters.groups.size());
  for (const auto& group : clusters.groups) labels.push_back(abs.label_of(state, group));

  const std::vector<GroupPlan> plan = reconcile(pool_, clusters, labels);

  StepEvent event;
  event.step = step_index_;
  event.groups = clusters.groups;

  // Rebuild the pool for this step: reuse what the plan kept, recompute
  // the rest. Shields for vanished signatures are dropped.
  std::map<std::vector<int>, Shield> next_pool;
  const auto t0 = std::chrono::steady_clock::now();
  for (const GroupPlan& gp : plan) {
    if (gp.action == PlanAction::kReuse) {
      auto node = pool_.extract(gp.group);
      next_pool.insert(std::move(node));
      ++result.reuses;
      event.decisions.push_back("reuse");
    } else {
      next_pool.emplace(gp.group, factory_->recompute_shield(gp.group, state));
      ++result.recomputes;
      result.synthesis_states += factory_->last_synthesis_states();
      event.decisions.push_back("recompute");
    }
  }
  pool_ = std::move(next_pool);
  result.synthesis_wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  // Shielding phase: each group's shield filters its joint proposal.
  for (std::size_t g = 0; g < clusters.groups.size(); ++g) {
    const auto& group = clusters.groups[g];
    Shield& shield = pool_.at(group);

    JointAction ja;
    ja.size = static_cast<int>(group.size());
    for (std::size_t i = 0; i < group.size(); ++i)
      ja[static_cast<int>(i)] = proposed[static_cast<std::size_t>(group[i])];

    const FilterResult fr = shield.filter(labels[g], ja);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const int agent = group[i];
      result.safe_actions[static_cast<std::size_t>(agent)] = fr.corrected[static_cast<int>(i)];
      if (fr.corrected_flags[i]) {
        result.corrected[static_cast<std::size_t>(agent)] = true;
        result.penalties[static_cast<std::size_t>(agent)] = penalty_;
        event.corrected_agents.push_back(agent);
      }
    }
    shield.advance(labels[g], fr.corrected);
  }

  event.synthesis_states = result.synthesis_states;
  event.synthesis_wall_ms = result.synthesis_wall_ms;
  if (sink_) sink_(event);
  ++step_index_;
  return result;
}

void DynamicShieldManager::reset_episode() {
  pool_.clear();
  step_index_ = 0;
}

}  // namespace dynashield
