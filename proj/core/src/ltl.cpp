#include "dynashield/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace dynashield {

LtlFormula LtlFormula::make_true() {
  static const auto node = std::make_shared<const Node>(Node{LtlKind::kTrue, "", nullptr, nullptr});
  return LtlFormula(node);
}

LtlFormula LtlFormula::make_false() {
  static const auto node = std::make_shared<const Node>(Node{LtlKind::kFalse, "", nullptr, nullptr});
  return LtlFormula(node);
}

LtlFormula LtlFormula::atom(std::string name) {
  if (name.empty()) throw Error("atom name must be nonempty");
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
    throw Error("atom name must start with a letter or underscore: " + name);
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
      throw Error("atom name contains an invalid character: " + name);
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kAtom, std::move(name), nullptr, nullptr}));
}

LtlFormula LtlFormula::negation(LtlFormula f) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kNot, "", f.node_, nullptr}));
}
LtlFormula LtlFormula::conjunction(LtlFormula a, LtlFormula b) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kAnd, "", a.node_, b.node_}));
}
LtlFormula LtlFormula::disjunction(LtlFormula a, LtlFormula b) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kOr, "", a.node_, b.node_}));
}
LtlFormula LtlFormula::next(LtlFormula f) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kNext, "", f.node_, nullptr}));
}
LtlFormula LtlFormula::always(LtlFormula f) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kAlways, "", f.node_, nullptr}));
}
LtlFormula LtlFormula::until(LtlFormula a, LtlFormula b) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kUntil, "", a.node_, b.node_}));
}
LtlFormula LtlFormula::eventually(LtlFormula f) {
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::kEventually, "", f.node_, nullptr}));
}

bool LtlFormula::operator==(const LtlFormula& o) const {
  if (node_ == o.node_) return true;
  if (kind() != o.kind()) return false;
  switch (kind()) {
    case LtlKind::kTrue:
    case LtlKind::kFalse:
      return true;
    case LtlKind::kAtom:
      return atom_name() == o.atom_name();
    case LtlKind::kNot:
    case LtlKind::kNext:
    case LtlKind::kAlways:
    case LtlKind::kEventually:
      return lhs() == o.lhs();
    case LtlKind::kAnd:
    case LtlKind::kOr:
    case LtlKind::kUntil:
      return lhs() == o.lhs() && rhs() == o.rhs();
  }
  return false;
}

std::string LtlFormula::to_string() const {
  switch (kind()) {
    case LtlKind::kTrue: return "true";
    case LtlKind::kFalse: return "false";
    case LtlKind::kAtom: return atom_name();
    case LtlKind::kNot: return "!(" + lhs().to_string() + ")";
    case LtlKind::kAnd: return "(" + lhs().to_string() + " & " + rhs().to_string() + ")";
    case LtlKind::kOr: return "(" + lhs().to_string() + " | " + rhs().to_string() + ")";
    case LtlKind::kNext: return "X (" + lhs().to_string() + ")";
    case LtlKind::kAlways: return "G (" + lhs().to_string() + ")";
    case LtlKind::kUntil: return "(" + lhs().to_string() + " U " + rhs().to_string() + ")";
    case LtlKind::kEventually: return "F (" + lhs().to_string() + ")";
  }
  return "?";
}

int LtlFormula::next_depth() const {
  switch (kind()) {
    case LtlKind::kTrue:
    case LtlKind::kFalse:
    case LtlKind::kAtom:
      return 0;
    case LtlKind::kNot:
    case LtlKind::kAlways:
    case LtlKind::kEventually:
      return lhs().next_depth();
    case LtlKind::kNext:
      return 1 + lhs().next_depth();
    case LtlKind::kAnd:
    case LtlKind::kOr:
    case LtlKind::kUntil:
      return std::max(lhs().next_depth(), rhs().next_depth());
  }
  return 0;
}

std::vector<std::string> LtlFormula::atoms() const {
  std::set<std::string> names;
  const auto walk = [&](auto&& self, const LtlFormula& f) -> void {
    switch (f.kind()) {
      case LtlKind::kAtom:
        names.insert(f.atom_name());
        return;
      case LtlKind::kTrue:
      case LtlKind::kFalse:
        return;
      case LtlKind::kNot:
      case LtlKind::kNext:
      case LtlKind::kAlways:
      case LtlKind::kEventually:
        self(self, f.lhs());
        return;
      case LtlKind::kAnd:
      case LtlKind::kOr:
      case LtlKind::kUntil:
        self(self, f.lhs());
        self(self, f.rhs());
        return;
    }
  };
  walk(walk, *this);
  return {names.begin(), names.end()};
}

// ── Parser ───────────────────────────────────────────────────────────────

namespace {

enum class TokKind { kTrue, kFalse, kIdent, kNot, kAnd, kOr, kImplies, kNext, kAlways, kEventually, kUntil, kLParen, kRParen, kEnd };

struct Token {
  TokKind kind;
  std::string text;
  std::size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    const std::size_t pos = i_;
    if (i_ >= text_.size()) return {TokKind::kEnd, "", pos};
    const char c = text_[i_];
    if (c == '(') { ++i_; return {TokKind::kLParen, "(", pos}; }
    if (c == ')') { ++i_; return {TokKind::kRParen, ")", pos}; }
    if (c == '!') { ++i_; return {TokKind::kNot, "!", pos}; }
    if (c == '&') { ++i_; return {TokKind::kAnd, "&", pos}; }
    if (c == '|') { ++i_; return {TokKind::kOr, "|", pos}; }
    if (c == '-') {
      if (i_ + 1 < text_.size() && text_[i_ + 1] == '>') {
        i_ += 2;
        return {TokKind::kImplies, "->", pos};
      }
      throw LtlParseError("unknown token '-'", pos);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
        ++j;
      std::string word(text_.substr(i_, j - i_));
      i_ = j;
      if (word == "true") return {TokKind::kTrue, word, pos};
      if (word == "false") return {TokKind::kFalse, word, pos};
      if (word == "X") return {TokKind::kNext, word, pos};
      if (word == "G") return {TokKind::kAlways, word, pos};
      if (word == "F") return {TokKind::kEventually, word, pos};
      if (word == "U") return {TokKind::kUntil, word, pos};
      return {TokKind::kIdent, word, pos};
    }
    throw LtlParseError(std::string("unknown token '") + c + "'", pos);
  }

 private:
  std::string_view text_;
  std::size_t i_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { advance(); }

  LtlFormula parse() {
    LtlFormula f = parse_implies();
    if (tok_.kind != TokKind::kEnd)
      throw LtlParseError("unexpected trailing input '" + tok_.text + "'", tok_.pos);
    return f;
  }

 private:
  void advance() { tok_ = lex_.next(); }

  bool eat(TokKind k) {
    if (tok_.kind != k) return false;
    advance();
    return true;
  }

  // implies is right-associative and expanded: a -> b == !a | b.
  LtlFormula parse_implies() {
    LtlFormula left = parse_or();
    if (eat(TokKind::kImplies)) {
      LtlFormula right = parse_implies();
      return LtlFormula::disjunction(LtlFormula::negation(left), right);
    }
    return left;
  }

  LtlFormula parse_or() {
    LtlFormula f = parse_and();
    while (eat(TokKind::kOr)) f = LtlFormula::disjunction(f, parse_and());
    return f;
  }

  LtlFormula parse_and() {
    LtlFormula f = parse_until();
    while (eat(TokKind::kAnd)) f = LtlFormula::conjunction(f, parse_until());
    return f;
  }

  // U binds tighter than & and is right-associative.
  LtlFormula parse_until() {
    LtlFormula left = parse_unary();
    if (eat(TokKind::kUntil)) {
      LtlFormula right = parse_until();
      return LtlFormula::until(left, right);
    }
    return left;
  }

  LtlFormula parse_unary() {
    switch (tok_.kind) {
      case TokKind::kNot: advance(); return LtlFormula::negation(parse_unary());
      case TokKind::kNext: advance(); return LtlFormula::next(parse_unary());
      case TokKind::kAlways: advance(); return LtlFormula::always(parse_unary());
      case TokKind::kEventually: {
        // F a == true U a
        advance();
        return LtlFormula::until(LtlFormula::make_true(), parse_unary());
      }
      case TokKind::kTrue: advance(); return LtlFormula::make_true();
      case TokKind::kFalse: advance(); return LtlFormula::make_false();
      case TokKind::kIdent: {
        std::string name = tok_.text;
        advance();
        return LtlFormula::atom(std::move(name));
      }
      case TokKind::kLParen: {
        advance();
        LtlFormula f = parse_implies();
        if (!eat(TokKind::kRParen))
          throw LtlParseError("expected ')'", tok_.pos);
        return f;
      }
      case TokKind::kEnd:
        throw LtlParseError("unexpected end of input", tok_.pos);
      default:
        throw LtlParseError("unexpected token '" + tok_.text + "'", tok_.pos);
    }
  }

  Lexer lex_;
  Token tok_{TokKind::kEnd, "", 0};
};

}  // namespace

LtlFormula parse_ltl(std::string_view text) { return Parser(text).parse(); }

// ── Normalization ────────────────────────────────────────────────────────

namespace {

LtlFormula normalize_pos(const LtlFormula& f);

LtlFormula normalize_neg(const LtlFormula& f) {
  switch (f.kind()) {
    case LtlKind::kTrue: return LtlFormula::make_false();
    case LtlKind::kFalse: return LtlFormula::make_true();
    case LtlKind::kAtom: return LtlFormula::negation(f);
    case LtlKind::kNot: return normalize_pos(f.lhs());
    case LtlKind::kAnd: {
      LtlFormula a = normalize_neg(f.lhs());
      LtlFormula b = normalize_neg(f.rhs());
      if (a.kind() == LtlKind::kTrue || b.kind() == LtlKind::kTrue) return LtlFormula::make_true();
      if (a.kind() == LtlKind::kFalse) return b;
      if (b.kind() == LtlKind::kFalse) return a;
      return LtlFormula::disjunction(a, b);
    }
    case LtlKind::kOr: {
      LtlFormula a = normalize_neg(f.lhs());
      LtlFormula b = normalize_neg(f.rhs());
      if (a.kind() == LtlKind::kFalse || b.kind() == LtlKind::kFalse) return LtlFormula::make_false();
      if (a.kind() == LtlKind::kTrue) return b;
      if (b.kind() == LtlKind::kTrue) return a;
      return LtlFormula::conjunction(a, b);
    }
    case LtlKind::kNext: {
      LtlFormula inner = normalize_neg(f.lhs());
      if (inner.kind() == LtlKind::kTrue) return LtlFormula::make_true();
      if (inner.kind() == LtlKind::kFalse) return LtlFormula::make_false();
      return LtlFormula::next(inner);
    }
    case LtlKind::kAlways:
    case LtlKind::kUntil:
    case LtlKind::kEventually:
      // No dual inside the fragment; leave the negation in place so the
      // safety-fragment check rejects it.
      return LtlFormula::negation(normalize_pos(f));
  }
  return f;
}

LtlFormula normalize_pos(const LtlFormula& f) {
  switch (f.kind()) {
    case LtlKind::kTrue:
    case LtlKind::kFalse:
    case LtlKind::kAtom:
      return f;
    case LtlKind::kNot:
      return normalize_neg(f.lhs());
    case LtlKind::kAnd: {
      LtlFormula a = normalize_pos(f.lhs());
      LtlFormula b = normalize_pos(f.rhs());
      if (a.kind() == LtlKind::kFalse || b.kind() == LtlKind::kFalse) return LtlFormula::make_false();
      if (a.kind() == LtlKind::kTrue) return b;
      if (b.kind() == LtlKind::kTrue) return a;
      return LtlFormula::conjunction(a, b);
    }
    case LtlKind::kOr: {
      LtlFormula a = normalize_pos(f.lhs());
      LtlFormula b = normalize_pos(f.rhs());
      if (a.kind() == LtlKind::kTrue || b.kind() == LtlKind::kTrue) return LtlFormula::make_true();
      if (a.kind() == LtlKind::kFalse) return b;
      if (b.kind() == LtlKind::kFalse) return a;
      return LtlFormula::disjunction(a, b);
    }
    case LtlKind::kNext: {
      LtlFormula inner = normalize_pos(f.lhs());
      if (inner.kind() == LtlKind::kTrue) return LtlFormula::make_true();
      if (inner.kind() == LtlKind::kFalse) return LtlFormula::make_false();
      return LtlFormula::next(inner);
    }
    case LtlKind::kAlways: {
      LtlFormula inner = normalize_pos(f.lhs());
      if (inner.kind() == LtlKind::kTrue) return LtlFormula::make_true();
      if (inner.kind() == LtlKind::kFalse) return LtlFormula::make_false();
      return LtlFormula::always(inner);
    }
    case LtlKind::kUntil:
      return LtlFormula::until(normalize_pos(f.lhs()), normalize_pos(f.rhs()));
    case LtlKind::kEventually:
      return LtlFormula::eventually(normalize_pos(f.lhs()));
  }
  return f;
}

bool fragment_ok(const LtlFormula& f) {
  switch (f.kind()) {
    case LtlKind::kTrue:
    case LtlKind::kFalse:
    case LtlKind::kAtom:
      return true;
    case LtlKind::kNot:
      return f.lhs().kind() == LtlKind::kAtom;
    case LtlKind::kAnd:
    case LtlKind::kOr:
      return fragment_ok(f.lhs()) && fragment_ok(f.rhs());
    case LtlKind::kNext:
    case LtlKind::kAlways:
      return fragment_ok(f.lhs());
    case LtlKind::kUntil:
    case LtlKind::kEventually:
      return false;
  }
  return false;
}

}  // namespace

LtlFormula normalize(const LtlFormula& f) { return normalize_pos(f); }

bool is_safety_fragment(const LtlFormula& f) { return fragment_ok(normalize(f)); }

}  // namespace dynashield
