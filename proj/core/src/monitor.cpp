#include "dynashield/monitor.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

namespace dynashield {

PropositionAlphabet::PropositionAlphabet(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.size() > 8)
    throw Error("proposition alphabet capped at 8 propositions, got " +
                std::to_string(names_.size()));
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error("proposition names must be nonempty");
    if (!seen.insert(n).second) throw Error("duplicate proposition name: " + n);
  }
}

int PropositionAlphabet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

std::string PropositionAlphabet::letter_name(LetterId letter) const {
  if (names_.empty()) return "*";
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!out.empty()) out += "&";
    if (!letter_value(letter, static_cast<int>(i))) out += "!";
    out += names_[i];
  }
  return out;
}

namespace {

// The progression state machinery works over the closure of the
// normalized formula: every subformula gets a dense id, and monitor
// states are positive DNF over closure ids (set of terms; a term is a
// sorted set of ids). True = one empty term, False = no terms.
//
// Progression of an obligation over a letter yields the obligation that
// the remaining (infinite) suffix must satisfy. Because the fragment has
// no least-fixpoint operators, an obligation is satisfiable iff the
// progression automaton can avoid the syntactic False forever; the
// liveness pass below folds everything else into the trap.

using Term = std::vector<int>;       // sorted closure ids
using Dnf = std::vector<Term>;       // sorted terms, absorption-minimal

const Dnf kFalseDnf{};               // no terms
Dnf true_dnf() { return Dnf{Term{}}; }

bool term_subsumes(const Term& a, const Term& b) {
  // a ⊆ b: conjunction a is weaker, b is redundant.
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Sort terms and drop any term subsumed by another (absorption). The
// result is the unique minimal DNF of a positive combination, which makes
// states canonical.
void canonicalize(Dnf& d) {
  for (auto& t : d) {
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
  }
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  Dnf kept;
  for (std::size_t i = 0; i < d.size(); ++i) {
    bool subsumed = false;
    for (std::size_t j = 0; j < d.size() && !subsumed; ++j)
      subsumed = i != j && term_subsumes(d[j], d[i]);
    if (!subsumed) kept.push_back(d[i]);
  }
  d = std::move(kept);
}

Dnf dnf_or(const Dnf& a, const Dnf& b) {
  Dnf out = a;
  out.insert(out.end(), b.begin(), b.end());
  canonicalize(out);
  return out;
}

Dnf dnf_and(const Dnf& a, const Dnf& b) {
  Dnf out;
  for (const Term& ta : a) {
    for (const Term& tb : b) {
      Term t = ta;
      t.insert(t.end(), tb.begin(), tb.end());
      out.push_back(std::move(t));
    }
  }
  canonicalize(out);
  return out;
}

class MonitorBuilder {
 public:
  MonitorBuilder(const LtlFormula& f, const PropositionAlphabet& alphabet)
      : alphabet_(alphabet) {
    root_ = intern_formula(normalize(f));
  }

  Dfa build() {
    // Explore the progression automaton from the initial obligation.
    std::map<Dnf, StateId> ids;
    std::vector<Dnf> states;
    std::queue<StateId> frontier;
    const auto intern_state = [&](Dnf d) -> StateId {
      const auto [it, inserted] = ids.emplace(std::move(d), static_cast<StateId>(states.size()));
      if (inserted) {
        states.push_back(it->first);
        frontier.push(it->second);
      }
      return it->second;
    };

    Dnf init = formula_dnf(root_);
    const StateId initial = intern_state(std::move(init));
    const std::uint32_t n_letters = alphabet_.letter_count();
    std::vector<StateId> delta;
    while (!frontier.empty()) {
      const StateId s = frontier.front();
      frontier.pop();
      const Dnf state = states[s];  // copy: states vector may grow
      for (LetterId l = 0; l < n_letters; ++l) {
        const StateId t = intern_state(progress_state(state, l));
        const std::size_t slot = static_cast<std::size_t>(s) * n_letters + l;
        if (slot >= delta.size()) delta.resize((s + 1) * static_cast<std::size_t>(n_letters));
        delta[slot] = t;
      }
    }
    const std::uint32_t n = static_cast<std::uint32_t>(states.size());
    delta.resize(static_cast<std::size_t>(n) * n_letters);

    // Liveness: a state is satisfiable iff some infinite run from it
    // avoids the syntactic False state. Greatest fixed point over "has a
    // successor still alive".
    std::vector<std::uint8_t> alive(n, 1);
    for (StateId s = 0; s < n; ++s)
      if (states[s].empty()) alive[s] = 0;  // syntactic False
    for (bool changed = true; changed;) {
      changed = false;
      for (StateId s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        bool has_live_succ = false;
        for (LetterId l = 0; l < n_letters && !has_live_succ; ++l)
          if (alive[delta[static_cast<std::size_t>(s) * n_letters + l]]) has_live_succ = true;
        if (!has_live_succ) {
          alive[s] = 0;
          changed = true;
        }
      }
    }

    // Collapse all dead states into one absorbing trap and minimize.
    Dfa out;
    for (std::uint32_t i = 0; i < n_letters; ++i) out.letters.push_back(alphabet_.letter_name(i));
    const bool any_dead = std::any_of(alive.begin(), alive.end(), [](auto a) { return !a; });
    std::vector<StateId> remap(n);
    StateId next_id = 0;
    for (StateId s = 0; s < n; ++s)
      if (alive[s]) remap[s] = next_id++;
    const StateId trap = next_id;
    if (any_dead) {
      ++next_id;
      for (StateId s = 0; s < n; ++s)
        if (!alive[s]) remap[s] = trap;
    }

    out.num_states = next_id;
    out.initial = remap[initial];
    out.delta.assign(static_cast<std::size_t>(out.num_states) * n_letters, 0);
    out.accepting.assign(out.num_states, 1);
    if (any_dead) {
      out.accepting[trap] = 0;
      for (LetterId l = 0; l < n_letters; ++l)
        out.delta[static_cast<std::size_t>(trap) * n_letters + l] = trap;
    }
    for (StateId s = 0; s < n; ++s) {
      if (!alive[s]) continue;
      for (LetterId l = 0; l < n_letters; ++l)
        out.delta[static_cast<std::size_t>(remap[s]) * n_letters + l] =
            remap[delta[static_cast<std::size_t>(s) * n_letters + l]];
    }
    out.validate();
    return minimize(out);
  }

 private:
  int intern_formula(const LtlFormula& f) {
    for (std::size_t i = 0; i < closure_.size(); ++i)
      if (closure_[i] == f) return static_cast<int>(i);
    closure_.push_back(f);
    return static_cast<int>(closure_.size()) - 1;
  }

  // DNF of a formula as a positive combination of closure elements
  // (literals and temporal subformulas stay atomic; And/Or distribute).
  Dnf formula_dnf(int id) {
    const LtlFormula f = closure_[static_cast<std::size_t>(id)];
    switch (f.kind()) {
      case LtlKind::kTrue: return true_dnf();
      case LtlKind::kFalse: return kFalseDnf;
      case LtlKind::kAnd:
        return dnf_and(formula_dnf(intern_formula(f.lhs())), formula_dnf(intern_formula(f.rhs())));
      case LtlKind::kOr:
        return dnf_or(formula_dnf(intern_formula(f.lhs())), formula_dnf(intern_formula(f.rhs())));
      default:
        return Dnf{Term{id}};
    }
  }

  // Obligation on the suffix after reading `letter`, for one closure element.
  Dnf progress_element(int id, LetterId letter) {
    const LtlFormula f = closure_[static_cast<std::size_t>(id)];
    switch (f.kind()) {
      case LtlKind::kTrue:
        return true_dnf();
      case LtlKind::kFalse:
        return kFalseDnf;
      case LtlKind::kAtom: {
        const int p = alphabet_.index_of(f.atom_name());
        if (p < 0) throw Error("atom not in alphabet: " + f.atom_name());
        return alphabet_.letter_value(letter, p) ? true_dnf() : kFalseDnf;
      }
      case LtlKind::kNot: {
        const int p = alphabet_.index_of(f.lhs().atom_name());
        if (p < 0) throw Error("atom not in alphabet: " + f.lhs().atom_name());
        return alphabet_.letter_value(letter, p) ? kFalseDnf : true_dnf();
      }
      case LtlKind::kAnd:
        return dnf_and(progress_element(intern_formula(f.lhs()), letter),
                       progress_element(intern_formula(f.rhs()), letter));
      case LtlKind::kOr:
        return dnf_or(progress_element(intern_formula(f.lhs()), letter),
                      progress_element(intern_formula(f.rhs()), letter));
      case LtlKind::kNext:
        return Dnf{Term{intern_formula(f.lhs())}};
      case LtlKind::kAlways:
        // G φ ≡ φ ∧ X G φ: body now, keep the obligation.
        return dnf_and(progress_element(intern_formula(f.lhs()), letter), Dnf{Term{id}});
      default:
        throw FragmentError("formula outside the safety fragment: " + f.to_string());
    }
  }

  Dnf progress_state(const Dnf& state, LetterId letter) {
    Dnf out = kFalseDnf;
    for (const Term& term : state) {
      Dnf acc = true_dnf();
      for (int id : term) {
        acc = dnf_and(acc, progress_element(id, letter));
        if (acc.empty()) break;
      }
      out = dnf_or(out, acc);
    }
    return out;
  }

  const PropositionAlphabet& alphabet_;
  std::vector<LtlFormula> closure_;
  int root_ = 0;
};

}  // namespace

Dfa to_monitor_dfa(const LtlFormula& f, const PropositionAlphabet& alphabet) {
  if (!is_safety_fragment(f))
    throw FragmentError("monitor construction requires the safety fragment: " + f.to_string());
  for (const auto& atom : f.atoms())
    if (alphabet.index_of(atom) < 0) throw Error("atom not in alphabet: " + atom);
  return MonitorBuilder(f, alphabet).build();
}

}  // namespace dynashield
