#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dynashield/errors.hpp"

namespace dynashield {

enum class LtlKind : std::uint8_t {
  kTrue,
  kFalse,
  kAtom,
  kNot,
  kAnd,
  kOr,
  kNext,
  kAlways,
  kUntil,       // parsed, rejected by the safety-fragment check
  kEventually,  // constructible, rejected by the safety-fragment check
};

// Immutable LTL formula tree with shared subterms. Value type: copies are
// cheap handle copies; equality is structural.
class LtlFormula {
 public:
  LtlFormula() : LtlFormula(make_true()) {}

  static LtlFormula make_true();
  static LtlFormula make_false();
  static LtlFormula atom(std::string name);
  static LtlFormula negation(LtlFormula f);
  static LtlFormula conjunction(LtlFormula a, LtlFormula b);
  static LtlFormula disjunction(LtlFormula a, LtlFormula b);
  static LtlFormula next(LtlFormula f);
  static LtlFormula always(LtlFormula f);
  static LtlFormula until(LtlFormula a, LtlFormula b);
  static LtlFormula eventually(LtlFormula f);

  LtlKind kind() const { return node_->kind; }
  const std::string& atom_name() const { return node_->atom; }
  LtlFormula lhs() const { return LtlFormula(node_->lhs); }
  LtlFormula rhs() const { return LtlFormula(node_->rhs); }

  bool operator==(const LtlFormula& o) const;

  std::string to_string() const;

  // Nesting depth of Next operators (0 for purely propositional/Always
  // bodies without X).
  int next_depth() const;

  // All atom names, sorted and deduplicated.
  std::vector<std::string> atoms() const;

 private:
  struct Node {
    LtlKind kind;
    std::string atom;
    std::shared_ptr<const Node> lhs, rhs;
  };
  explicit LtlFormula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

// Parses the ASCII concrete syntax:
//   true false <ident> ! & | -> X G F U ( )
// with precedence unary > U > & > | > ->. Derived operators are expanded:
// a -> b becomes !a | b, F a becomes true U a, and G a becomes the Always
// node. Throws LtlParseError with a character position on bad input.
LtlFormula parse_ltl(std::string_view text);

// Negation normal form within the safety fragment: constants folded,
// double negations removed, Not pushed through And/Or/Next down to atoms.
// Negations of Always/Until/Eventually are left in place (those formulas
// fall outside the fragment and fail is_safety_fragment).
LtlFormula normalize(const LtlFormula& f);

// True iff normalize(f) contains only True/False/Atom/Not-on-Atom/And/Or/
// Next/Always nodes.
bool is_safety_fragment(const LtlFormula& f);

}  // namespace dynashield
