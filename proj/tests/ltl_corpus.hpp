// Fixed monitor-correctness corpus shared by the unit tests and the
// acceptance suite. Temporal formulas stay within 2 propositions and
// Next-free formulas within 3, so exhaustive word enumeration is cheap.
#pragma once

#include <string>
#include <vector>

#include "dynashield/ltl.hpp"
#include "dynashield/monitor.hpp"
#include "oracles.hpp"

namespace dynashield::testing {

struct CorpusEntry {
  const char* text;
  std::vector<std::string> props;
};

inline const std::vector<CorpusEntry>& monitor_corpus() {
  static const std::vector<CorpusEntry> c = {
      {"G !collision", {"collision"}},
      {"true", {"a"}},
      {"false", {"a"}},
      {"!a", {"a"}},
      {"G (!a | X !b)", {"a", "b"}},
      {"G (a -> X b)", {"a", "b"}},
      {"a & X b", {"a", "b"}},
      {"X X a", {"a"}},
      {"G a | G b", {"a", "b"}},
      {"G (a | X a | X X a)", {"a"}},
      {"G !a & G (b -> X b)", {"a", "b"}},
      {"G (!a | !b | !c)", {"a", "b", "c"}},
  };
  return c;
}

// Walks every word up to max_len, comparing monitor acceptance with the
// independent bad-prefix oracle (bad prefixes are extension-closed, so
// descendants of a bad word skip the oracle). Returns the number of words
// checked, or -1 on the first disagreement.
inline long long check_monitor_entry(const CorpusEntry& entry, std::size_t max_len) {
  const LtlFormula f = parse_ltl(entry.text);
  const PropositionAlphabet sigma(entry.props);
  const Dfa m = to_monitor_dfa(f, sigma);
  m.validate();

  struct Frame {
    std::vector<LetterId> word;
    StateId state;
    bool bad;
  };
  const std::uint32_t n_letters = sigma.letter_count();
  std::vector<Frame> stack{{{}, m.initial, is_bad_prefix(f, sigma, {})}};
  if (m.is_accepting(m.initial) != !stack[0].bad) return -1;
  long long checked = 1;
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (fr.word.size() >= max_len) continue;
    for (LetterId l = 0; l < n_letters; ++l) {
      Frame next;
      next.word = fr.word;
      next.word.push_back(l);
      next.state = m.step(fr.state, l);
      next.bad = fr.bad || is_bad_prefix(f, sigma, next.word);
      if (m.is_accepting(next.state) != !next.bad) return -1;
      ++checked;
      stack.push_back(std::move(next));
    }
  }
  return checked;
}

}  // namespace dynashield::testing
