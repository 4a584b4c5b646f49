#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynashield/dfa.hpp"
#include "dynashield/ltl.hpp"

namespace dynashield {

// Ordered set of proposition names. A letter of the induced alphabet is a
// full truth assignment over the propositions, encoded as a bitmask with
// proposition i at bit i. Capped at 8 propositions (256 letters).
class PropositionAlphabet {
 public:
  explicit PropositionAlphabet(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  std::uint32_t letter_count() const { return 1u << names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  // -1 if absent.
  int index_of(const std::string& name) const;

  bool letter_value(LetterId letter, int prop_index) const {
    return (letter >> prop_index) & 1u;
  }

  // e.g. "a&!b" for the assignment {a=1, b=0}.
  std::string letter_name(LetterId letter) const;

 private:
  std::vector<std::string> names_;
};

// Compiles a safety-fragment formula into its bad-prefix monitor: a total,
// minimized DFA accepting exactly the finite words that are not bad
// prefixes of the formula. All bad prefixes land in a single absorbing
// non-accepting trap state (if any word is bad at all).
//
// Construction: formula progression with canonical positive-DNF states,
// followed by a liveness fixed point that folds semantically unsatisfiable
// obligations into the trap, then partition-refinement minimization.
Dfa to_monitor_dfa(const LtlFormula& f, const PropositionAlphabet& alphabet);

}  // namespace dynashield
