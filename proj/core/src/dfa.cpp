#include "dynashield/dfa.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace dynashield {

void Dfa::validate() const {
  if (num_states == 0) throw Error("DFA must have at least one state");
  if (letters.empty()) throw Error("DFA must have at least one letter");
  if (initial >= num_states) throw Error("DFA initial state out of range");
  if (delta.size() != static_cast<std::size_t>(num_states) * letters.size())
    throw Error("DFA transition table is not total");
  if (accepting.size() != num_states) throw Error("DFA accepting set size mismatch");
  for (StateId t : delta)
    if (t >= num_states) throw Error("DFA transition target out of range");
}

LetterAlign identity_align(const Dfa& a, const Dfa& b) {
  if (a.letter_count() != b.letter_count())
    throw Error("identity_align requires equal alphabet sizes");
  LetterAlign align;
  align.a_letter.resize(a.letter_count());
  align.b_letter.resize(b.letter_count());
  std::iota(align.a_letter.begin(), align.a_letter.end(), 0u);
  std::iota(align.b_letter.begin(), align.b_letter.end(), 0u);
  align.names = a.letters;
  return align;
}

Dfa product(const Dfa& a, const Dfa& b, const LetterAlign& align) {
  a.validate();
  b.validate();
  if (align.size() == 0) throw Error("letter_align must cover a nonempty shared alphabet");
  for (std::size_t i = 0; i < align.size(); ++i) {
    if (align.a_letter[i] >= a.letter_count() || align.b_letter[i] >= b.letter_count())
      throw Error("letter_align references a letter outside a factor's alphabet");
  }

  Dfa out;
  out.letters.reserve(align.size());
  for (std::size_t i = 0; i < align.size(); ++i) {
    if (i < align.names.size() && !align.names[i].empty()) {
      out.letters.push_back(align.names[i]);
    } else {
      out.letters.push_back(a.letters[align.a_letter[i]] + "&" + b.letters[align.b_letter[i]]);
    }
  }

  const auto pack = [&](StateId sa, StateId sb) -> std::uint64_t {
    return (static_cast<std::uint64_t>(sa) << 32) | sb;
  };
  std::unordered_map<std::uint64_t, StateId> ids;
  std::vector<std::pair<StateId, StateId>> pairs;
  std::queue<StateId> frontier;

  const auto intern = [&](StateId sa, StateId sb) -> StateId {
    const auto [it, inserted] = ids.emplace(pack(sa, sb), static_cast<StateId>(pairs.size()));
    if (inserted) {
      pairs.emplace_back(sa, sb);
      frontier.push(it->second);
    }
    return it->second;
  };

  out.initial = intern(a.initial, b.initial);
  std::vector<StateId> delta;
  while (!frontier.empty()) {
    const StateId id = frontier.front();
    frontier.pop();
    const auto [sa, sb] = pairs[id];
    for (std::size_t l = 0; l < align.size(); ++l) {
      const StateId ta = a.step(sa, align.a_letter[l]);
      const StateId tb = b.step(sb, align.b_letter[l]);
      const StateId tid = intern(ta, tb);
      const std::size_t slot = static_cast<std::size_t>(id) * align.size() + l;
      if (slot >= delta.size()) delta.resize((static_cast<std::size_t>(id) + 1) * align.size());
      delta[slot] = tid;
    }
  }

  out.num_states = static_cast<std::uint32_t>(pairs.size());
  delta.resize(static_cast<std::size_t>(out.num_states) * align.size());
  out.delta = std::move(delta);
  out.accepting.resize(out.num_states);
  for (StateId s = 0; s < out.num_states; ++s)
    out.accepting[s] = (a.is_accepting(pairs[s].first) && b.is_accepting(pairs[s].second)) ? 1 : 0;
  out.validate();
  return out;
}

std::vector<StateId> run(const Dfa& d, std::span<const LetterId> word) {
  std::vector<StateId> states;
  states.reserve(word.size() + 1);
  StateId s = d.initial;
  states.push_back(s);
  for (LetterId l : word) {
    if (l >= d.letter_count()) throw Error("run: letter outside the automaton's alphabet");
    s = d.step(s, l);
    states.push_back(s);
  }
  return states;
}

bool accepts(const Dfa& d, std::span<const LetterId> word) {
  return d.is_accepting(run(d, word).back());
}

Dfa minimize(const Dfa& d) {
  d.validate();
  const std::uint32_t n_letters = d.letter_count();

  // Restrict to reachable states first.
  std::vector<StateId> order;
  std::vector<std::int64_t> reach_id(d.num_states, -1);
  {
    std::queue<StateId> q;
    q.push(d.initial);
    reach_id[d.initial] = 0;
    order.push_back(d.initial);
    while (!q.empty()) {
      const StateId s = q.front();
      q.pop();
      for (LetterId l = 0; l < n_letters; ++l) {
        const StateId t = d.step(s, l);
        if (reach_id[t] < 0) {
          reach_id[t] = static_cast<std::int64_t>(order.size());
          order.push_back(t);
          q.push(t);
        }
      }
    }
  }
  const std::uint32_t n = static_cast<std::uint32_t>(order.size());

  // Moore partition refinement on the reachable subautomaton.
  std::vector<std::uint32_t> block(n);
  for (std::uint32_t i = 0; i < n; ++i) block[i] = d.is_accepting(order[i]) ? 1 : 0;
  std::uint32_t block_count = 2;
  // Degenerate case: all states in one class.
  {
    bool any0 = false, any1 = false;
    for (std::uint32_t b : block) (b ? any1 : any0) = true;
    if (!any0 || !any1) {
      std::fill(block.begin(), block.end(), 0u);
      block_count = 1;
    }
  }

  for (;;) {
    std::map<std::vector<std::uint32_t>, std::uint32_t> sig_to_block;
    std::vector<std::uint32_t> next_block(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::vector<std::uint32_t> sig;
      sig.reserve(n_letters + 1);
      sig.push_back(block[i]);
      for (LetterId l = 0; l < n_letters; ++l) {
        const StateId t = d.step(order[i], l);
        sig.push_back(block[static_cast<std::size_t>(reach_id[t])]);
      }
      const auto [it, inserted] =
          sig_to_block.emplace(std::move(sig), static_cast<std::uint32_t>(sig_to_block.size()));
      next_block[i] = it->second;
    }
    const std::uint32_t next_count = static_cast<std::uint32_t>(sig_to_block.size());
    if (next_count == block_count) {
      block = std::move(next_block);
      break;
    }
    block = std::move(next_block);
    block_count = next_count;
  }

  Dfa out;
  out.letters = d.letters;
  out.num_states = block_count;
  out.initial = block[0];  // order[0] == d.initial
  out.delta.assign(static_cast<std::size_t>(block_count) * n_letters, 0);
  out.accepting.assign(block_count, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t b = block[i];
    out.accepting[b] = d.is_accepting(order[i]) ? 1 : 0;
    for (LetterId l = 0; l < n_letters; ++l) {
      const StateId t = d.step(order[i], l);
      out.delta[static_cast<std::size_t>(b) * n_letters + l] =
          block[static_cast<std::size_t>(reach_id[t])];
    }
  }
  out.validate();
  return out;
}

std::string to_dot(const Dfa& d, const std::string& name) {
  std::ostringstream out;
  out << "digraph " << name << " {\n";
  out << "  rankdir=LR;\n";
  out << "  __init [shape=point];\n";
  for (StateId s = 0; s < d.num_states; ++s) {
    out << "  s" << s << " [shape=" << (d.is_accepting(s) ? "doublecircle" : "circle")
        << " label=\"" << s << "\"];\n";
  }
  out << "  __init -> s" << d.initial << ";\n";
  for (StateId s = 0; s < d.num_states; ++s) {
    // Group parallel edges into one label.
    std::map<StateId, std::string> by_target;
    for (LetterId l = 0; l < d.letter_count(); ++l) {
      const StateId t = d.step(s, l);
      auto& lbl = by_target[t];
      if (!lbl.empty()) lbl += ", ";
      lbl += d.letters[l];
    }
    for (const auto& [t, lbl] : by_target)
      out << "  s" << s << " -> s" << t << " [label=\"" << lbl << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace dynashield
