#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynashield/errors.hpp"

namespace dynashield {

using StateId = std::uint32_t;
using LetterId = std::uint32_t;

// Deterministic finite automaton with dense integer state ids and a total
// transition table. Houses both specification monitors and environment
// abstraction automata.
struct Dfa {
  StateId initial = 0;
  std::uint32_t num_states = 0;
  std::vector<std::string> letters;     // one description per alphabet letter
  std::vector<StateId> delta;           // num_states * letters.size(), row-major by state
  std::vector<std::uint8_t> accepting;  // per state, 0/1

  std::uint32_t letter_count() const { return static_cast<std::uint32_t>(letters.size()); }

  StateId step(StateId s, LetterId l) const {
    return delta[static_cast<std::size_t>(s) * letters.size() + l];
  }

  bool is_accepting(StateId s) const { return accepting[s] != 0; }

  // Throws if the table is not total or ids are out of range.
  void validate() const;
};

// Aligns the alphabets of two automata onto a shared alphabet: shared
// letter i corresponds to letter a_letter[i] of the left factor and
// b_letter[i] of the right factor.
struct LetterAlign {
  std::vector<LetterId> a_letter;
  std::vector<LetterId> b_letter;
  std::vector<std::string> names;  // optional; empty -> synthesized "a&b"

  std::size_t size() const { return a_letter.size(); }
};

// Identity alignment for two automata over the same alphabet.
LetterAlign identity_align(const Dfa& a, const Dfa& b);

// Synchronous product restricted to states reachable from the pair of
// initial states; accepting = both components accepting.
Dfa product(const Dfa& a, const Dfa& b, const LetterAlign& align);

// States visited while reading `word`: q0, q1, ..., q_|word|.
std::vector<StateId> run(const Dfa& d, std::span<const LetterId> word);

// Does the automaton accept the word (final state accepting)?
bool accepts(const Dfa& d, std::span<const LetterId> word);

// Language-preserving minimization (partition refinement) over the
// reachable part of the automaton.
Dfa minimize(const Dfa& d);

// Graphviz dot rendering; accepting states are doublecircle.
std::string to_dot(const Dfa& d, const std::string& name = "dfa");

}  // namespace dynashield
