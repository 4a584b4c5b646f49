#include "dynashield/safety_game.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "dynashield/errors.hpp"

namespace dynashield {

LetterId letter_for_label(const AbstractLabel& label, const PropositionAlphabet& alphabet) {
  LetterId letter = 0;
  for (int p = 0; p < alphabet.size(); ++p) {
    const std::string& name = alphabet.names()[static_cast<std::size_t>(p)];
    bool value = false;
    if (name == "collision") value = label.collision;
    else if (name == "out_of_bounds") value = label.out_of_bounds;
    else if (name == "at_obstacle") value = label.at_obstacle;
    else throw Error("unsupported proposition for environment labels: " + name);
    if (value) letter |= (1u << p);
  }
  return letter;
}

SafetyGame build_game(std::shared_ptr<const EnvUnrolling> unrolling,
                      std::shared_ptr<const Dfa> spec, const PropositionAlphabet& alphabet) {
  if (!unrolling || !spec) throw Error("build_game: null inputs");
  spec->validate();
  if (spec->letter_count() != alphabet.letter_count())
    throw Error("build_game: spec alphabet does not match the proposition alphabet");

  SafetyGame g;
  g.unrolling = std::move(unrolling);
  g.spec = std::move(spec);
  g.alphabet = alphabet;
  g.horizon = g.unrolling->depth;
  g.actions = g.unrolling->actions;

  const int n_actions = g.actions.count();
  const auto key = [](std::uint32_t layer, std::uint32_t node, StateId q) -> std::uint64_t {
    return (static_cast<std::uint64_t>(layer) << 48) | (static_cast<std::uint64_t>(node) << 16) | q;
  };
  std::unordered_map<std::uint64_t, std::uint32_t> ids;
  const auto intern = [&](std::uint32_t layer, std::uint32_t node, StateId q) -> std::uint32_t {
    const auto [it, inserted] =
        ids.emplace(key(layer, node, q), static_cast<std::uint32_t>(g.states.size()));
    if (inserted) g.states.push_back({layer, node, q});
    return it->second;
  };

  // The spec monitor consumes the current label at construction time, so
  // an already-violating root is outside F^k from the start.
  const StateId q0 = g.spec->step(g.spec->initial, letter_for_label(g.unrolling->root(), alphabet));
  g.initial = intern(0, 0, q0);

  // Breadth-first over reachable triples; edges recorded per state.
  std::vector<std::vector<std::uint32_t>> succ_lists;
  for (std::uint32_t sid = 0; sid < g.states.size(); ++sid) {
    const auto st = g.states[sid];  // copy: states grows below
    succ_lists.resize((static_cast<std::size_t>(sid) + 1) * static_cast<std::size_t>(n_actions));
    if (static_cast<int>(st.layer) >= g.horizon) continue;  // horizon states keep no moves
    const auto& layer_edges = g.unrolling->edges[st.layer];
    for (int a = 0; a < n_actions; ++a) {
      auto& list =
          succ_lists[static_cast<std::size_t>(sid) * static_cast<std::size_t>(n_actions) +
                     static_cast<std::size_t>(a)];
      const auto& node_succs =
          layer_edges[static_cast<std::size_t>(st.node) * static_cast<std::size_t>(n_actions) +
                      static_cast<std::size_t>(a)];
      list.reserve(node_succs.size());
      for (std::uint32_t succ_node : node_succs) {
        const AbstractLabel& lbl = g.unrolling->layers[st.layer + 1][succ_node];
        const StateId q2 = g.spec->step(st.q, letter_for_label(lbl, alphabet));
        list.push_back(intern(st.layer + 1, succ_node, q2));
      }
      // Resolution must be well-defined: distinct successors of one action
      // always carry distinct labels (the unrolling deduplicates), so no
      // extra disambiguation is needed here.
    }
  }
  succ_lists.resize(g.states.size() * static_cast<std::size_t>(n_actions));

  g.in_winning_condition.resize(g.states.size());
  for (std::uint32_t sid = 0; sid < g.states.size(); ++sid)
    g.in_winning_condition[sid] = g.spec->is_accepting(g.states[sid].q) ? 1 : 0;

  g.edge_offsets.assign(g.states.size() * static_cast<std::size_t>(n_actions) + 1, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < succ_lists.size(); ++i) {
    g.edge_offsets[i] = static_cast<std::uint32_t>(total);
    total += succ_lists[i].size();
  }
  g.edge_offsets.back() = static_cast<std::uint32_t>(total);
  g.edge_targets.reserve(total);
  for (const auto& list : succ_lists)
    g.edge_targets.insert(g.edge_targets.end(), list.begin(), list.end());
  return g;
}

WinningRegion winning_region(const SafetyGame& game) {
  const int n_actions = game.actions.count();
  WinningRegion w(game.state_count(), 0);

  // Order states by decreasing layer: the game DAG is time-layered, so a
  // single backward pass is the greatest fixed point.
  std::vector<std::uint32_t> order(game.state_count());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return game.states[a].layer > game.states[b].layer;
  });

  for (std::uint32_t sid : order) {
    if (!game.in_winning_condition[sid]) continue;
    if (static_cast<int>(game.states[sid].layer) >= game.horizon) {
      w[sid] = 1;  // horizon states win by membership alone
      continue;
    }
    for (int a = 0; a < n_actions && !w[sid]; ++a) {
      const auto [begin, end] = game.successors(sid, a);
      if (begin == end) continue;
      bool all_winning = true;
      for (const std::uint32_t* it = begin; it != end && all_winning; ++it)
        all_winning = w[*it] != 0;
      if (all_winning) w[sid] = 1;
    }
  }
  return w;
}

namespace {

// Shield core backed by the explicit game tables.
class ExplicitCore final : public ShieldCore {
 public:
  ExplicitCore(SafetyGame game, WinningRegion w, std::vector<int> default_order)
      : game_(std::move(game)), w_(std::move(w)), order_(std::move(default_order)) {
    const int n_actions = game_.actions.count();
    if (order_.empty()) {
      order_.resize(static_cast<std::size_t>(n_actions));
      for (int i = 0; i < n_actions; ++i) order_[static_cast<std::size_t>(i)] = i;
    }
    if (static_cast<int>(order_.size()) != n_actions)
      throw Error("default_order must rank every joint action");
    // Core node ids == game state ids, with the initial state first is not
    // guaranteed by construction, so remap node 0 onto game_.initial.
  }

  const AbstractLabel& node_label(std::uint32_t node) const override {
    return game_.label_of(to_sid(node));
  }
  int node_time(std::uint32_t node) const override {
    return static_cast<int>(game_.states[to_sid(node)].layer);
  }
  bool node_winning(std::uint32_t node) override { return w_[to_sid(node)] != 0; }

  bool action_safe(std::uint32_t node, int action) override {
    const std::uint32_t sid = to_sid(node);
    if (static_cast<int>(game_.states[sid].layer) >= game_.horizon) return false;
    const auto [begin, end] = game_.successors(sid, action);
    if (begin == end) return false;
    for (const std::uint32_t* it = begin; it != end; ++it)
      if (!w_[*it]) return false;
    return true;
  }

  std::optional<int> fallback_action(std::uint32_t node) override {
    for (int a : order_)
      if (action_safe(node, a)) return a;
    return std::nullopt;
  }

  std::optional<std::uint32_t> resolve(std::uint32_t node, int action,
                                       const AbstractLabel& observed) override {
    const std::uint32_t sid = to_sid(node);
    if (static_cast<int>(game_.states[sid].layer) >= game_.horizon) return std::nullopt;
    const auto [begin, end] = game_.successors(sid, action);
    for (const std::uint32_t* it = begin; it != end; ++it)
      if (game_.label_of(*it) == observed) return from_sid(*it);
    return std::nullopt;
  }

  const JointActionSpace& action_space() const override { return game_.actions; }
  int horizon() const override { return game_.horizon; }
  std::size_t state_count() const override { return game_.state_count(); }

 private:
  // Node 0 must be the root; swap ids 0 and game_.initial.
  std::uint32_t to_sid(std::uint32_t node) const {
    if (node == 0) return game_.initial;
    if (node == game_.initial) return 0;
    return node;
  }
  std::uint32_t from_sid(std::uint32_t sid) const { return to_sid(sid); }

  SafetyGame game_;
  WinningRegion w_;
  std::vector<int> order_;
};

}  // namespace

Shield extract_shield(SafetyGame game, WinningRegion w, std::vector<int> agent_ids,
                      std::vector<int> default_order) {
  if (w.size() != game.state_count())
    throw Error("extract_shield: winning region does not match the game");
  if (!w[game.initial])
    throw UnsafeStartError("initial state is not winning: no k-step-safe strategy exists");
  if (agent_ids.empty()) {
    const int n = game.unrolling->root().size;
    for (int i = 0; i < n; ++i) agent_ids.push_back(i);
  }
  auto core = std::make_shared<ExplicitCore>(std::move(game), std::move(w), std::move(default_order));
  return Shield(std::move(core), std::move(agent_ids));
}

std::string game_to_json(const SafetyGame& game, const WinningRegion& w) {
  std::ostringstream out;
  out << "{\n  \"horizon\": " << game.horizon << ",\n  \"initial\": " << game.initial
      << ",\n  \"action_count\": " << game.actions.count() << ",\n  \"states\": [\n";
  for (std::uint32_t sid = 0; sid < game.state_count(); ++sid) {
    const auto& st = game.states[sid];
    const AbstractLabel& lbl = game.label_of(sid);
    out << "    {\"id\": " << sid << ", \"t\": " << st.layer << ", \"q\": " << st.q
        << ", \"accepting\": " << (game.in_winning_condition[sid] ? "true" : "false")
        << ", \"winning\": " << (w[sid] ? "true" : "false") << ", \"cells\": [";
    for (int i = 0; i < lbl.size; ++i) {
      if (i) out << ", ";
      out << "[" << lbl[i].x << ", " << lbl[i].y << "]";
    }
    out << "], \"collision\": " << (lbl.collision ? "true" : "false") << "}";
    out << (sid + 1 < game.state_count() ? ",\n" : "\n");
  }
  out << "  ],\n  \"transitions\": [\n";
  bool first = true;
  for (std::uint32_t sid = 0; sid < game.state_count(); ++sid) {
    for (int a = 0; a < game.actions.count(); ++a) {
      const auto [begin, end] = game.successors(sid, a);
      if (begin == end) continue;
      if (!first) out << ",\n";
      first = false;
      out << "    {\"from\": " << sid << ", \"action\": " << a << ", \"to\": [";
      for (const std::uint32_t* it = begin; it != end; ++it) {
        if (it != begin) out << ", ";
        out << *it;
      }
      out << "]}";
    }
  }
  out << "\n  ]\n}\n";
  return out.str();
}

}  // namespace dynashield
