#include <cctype>
#include <memory>

#include "dhg/scltl.hpp"

namespace dhg::scltl {
namespace {

enum class Tok { kNot, kAnd, kOr, kImplies, kNext, kUntil, kEventually, kAlways, kTrue, kFalse, kIdent, kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string text;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (c == '!' || c == '~') {
      out.push_back({Tok::kNot, start, "!"});
      ++i;
    } else if (c == '&') {
      i += (i + 1 < s.size() && s[i + 1] == '&') ? 2 : 1;
      out.push_back({Tok::kAnd, start, "&"});
    } else if (c == '|') {
      i += (i + 1 < s.size() && s[i + 1] == '|') ? 2 : 1;
      out.push_back({Tok::kOr, start, "|"});
    } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
      out.push_back({Tok::kImplies, start, "->"});
      i += 2;
    } else if (c == '(') {
      out.push_back({Tok::kLParen, start, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::kRParen, start, ")"});
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string word(s.substr(start, i - start));
      Tok k = Tok::kIdent;
      if (word == "X") k = Tok::kNext;
      else if (word == "U") k = Tok::kUntil;
      else if (word == "F") k = Tok::kEventually;
      else if (word == "G") k = Tok::kAlways;
      else if (word == "true") k = Tok::kTrue;
      else if (word == "false") k = Tok::kFalse;
      out.push_back({k, start, std::move(word)});
    } else {
      throw FormulaError(FormulaError::Kind::kSyntax, start,
                         "unexpected character '" + std::string(1, c) + "' at " + std::to_string(start));
    }
  }
  out.push_back({Tok::kEnd, s.size(), ""});
  return out;
}

// Surface syntax tree before normalization.
struct Raw {
  enum class K { kTrue, kFalse, kAtom, kNot, kAnd, kOr, kImplies, kNext, kUntil, kEventually, kAlways };
  K k;
  std::size_t pos;
  int atom = -1;
  std::unique_ptr<Raw> l, r;
};

using RawPtr = std::unique_ptr<Raw>;

RawPtr make(Raw::K k, std::size_t pos, RawPtr l = nullptr, RawPtr r = nullptr) {
  auto n = std::make_unique<Raw>();
  n->k = k;
  n->pos = pos;
  n->l = std::move(l);
  n->r = std::move(r);
  return n;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, std::span<const std::string> atoms) : toks_(std::move(toks)), atoms_(atoms) {}

  RawPtr parse() {
    RawPtr e = implies();
    if (peek().kind != Tok::kEnd) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormulaError(FormulaError::Kind::kSyntax, peek().pos,
                       "syntax error at " + std::to_string(peek().pos) + ": " + msg);
  }

  RawPtr implies() {
    RawPtr l = disjunction();
    if (peek().kind == Tok::kImplies) {
      std::size_t pos = take().pos;
      return make(Raw::K::kImplies, pos, std::move(l), implies());
    }
    return l;
  }

  RawPtr disjunction() {
    RawPtr l = conjunction();
    while (peek().kind == Tok::kOr) {
      std::size_t pos = take().pos;
      l = make(Raw::K::kOr, pos, std::move(l), conjunction());
    }
    return l;
  }

  RawPtr conjunction() {
    RawPtr l = until();
    while (peek().kind == Tok::kAnd) {
      std::size_t pos = take().pos;
      l = make(Raw::K::kAnd, pos, std::move(l), until());
    }
    return l;
  }

  RawPtr until() {
    RawPtr l = unary();
    if (peek().kind == Tok::kUntil) {
      std::size_t pos = take().pos;
      return make(Raw::K::kUntil, pos, std::move(l), until());
    }
    return l;
  }

  RawPtr unary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kNot:
        take();
        return make(Raw::K::kNot, t.pos, unary());
      case Tok::kNext:
        take();
        return make(Raw::K::kNext, t.pos, unary());
      case Tok::kEventually:
        take();
        return make(Raw::K::kEventually, t.pos, unary());
      case Tok::kAlways:
        take();
        return make(Raw::K::kAlways, t.pos, unary());
      default:
        return primary();
    }
  }

  RawPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kTrue:
        take();
        return make(Raw::K::kTrue, t.pos);
      case Tok::kFalse:
        take();
        return make(Raw::K::kFalse, t.pos);
      case Tok::kIdent: {
        take();
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
          if (atoms_[a] == t.text) {
            RawPtr n = make(Raw::K::kAtom, t.pos);
            n->atom = static_cast<int>(a);
            return n;
          }
        }
        throw FormulaError(FormulaError::Kind::kUndeclaredAtom, t.pos,
                           "undeclared atom '" + t.text + "' at " + std::to_string(t.pos));
      }
      case Tok::kLParen: {
        take();
        RawPtr e = implies();
        if (peek().kind != Tok::kRParen) fail("expected ')'");
        take();
        return e;
      }
      case Tok::kEnd:
        fail("unexpected end of formula");
      default:
        fail("unexpected '" + t.text + "'");
    }
  }

  std::vector<Token> toks_;
  std::span<const std::string> atoms_;
  std::size_t i_ = 0;
};

bool is_const(const Formula& f, FormulaKind k) { return f.kind == k; }

Formula conj(Formula a, Formula b) {
  if (is_const(a, FormulaKind::kFalse) || is_const(b, FormulaKind::kFalse)) return Formula::falsity();
  if (is_const(a, FormulaKind::kTrue)) return b;
  if (is_const(b, FormulaKind::kTrue)) return a;
  return Formula::binary(FormulaKind::kAnd, std::move(a), std::move(b));
}

Formula disj(Formula a, Formula b) {
  if (is_const(a, FormulaKind::kTrue) || is_const(b, FormulaKind::kTrue)) return Formula::truth();
  if (is_const(a, FormulaKind::kFalse)) return b;
  if (is_const(b, FormulaKind::kFalse)) return a;
  return Formula::binary(FormulaKind::kOr, std::move(a), std::move(b));
}

// Constants are folded so that `true` only survives as a whole formula or as
// the left side of U; the automaton relies on that.
Formula next(Formula a) {
  if (a.kind == FormulaKind::kTrue || a.kind == FormulaKind::kFalse) return a;
  return Formula::next(std::move(a));
}

Formula until(Formula a, Formula b) {
  if (b.kind == FormulaKind::kTrue || b.kind == FormulaKind::kFalse) return b;
  if (a.kind == FormulaKind::kFalse) return b;
  return Formula::binary(FormulaKind::kUntil, std::move(a), std::move(b));
}

[[noreturn]] void not_co_safe(const Raw& n) {
  throw FormulaError(FormulaError::Kind::kNotCoSafe, n.pos,
                     "operator at " + std::to_string(n.pos) + " is outside the co-safe fragment");
}

Formula normalize(const Raw& n, bool neg) {
  using K = Raw::K;
  switch (n.k) {
    case K::kTrue:
      return neg ? Formula::falsity() : Formula::truth();
    case K::kFalse:
      return neg ? Formula::truth() : Formula::falsity();
    case K::kAtom:
      return Formula::atom_of(n.atom, neg);
    case K::kNot:
      return normalize(*n.l, !neg);
    case K::kAnd:
      return neg ? disj(normalize(*n.l, true), normalize(*n.r, true))
                 : conj(normalize(*n.l, false), normalize(*n.r, false));
    case K::kOr:
      return neg ? conj(normalize(*n.l, true), normalize(*n.r, true))
                 : disj(normalize(*n.l, false), normalize(*n.r, false));
    case K::kImplies:
      return neg ? conj(normalize(*n.l, false), normalize(*n.r, true))
                 : disj(normalize(*n.l, true), normalize(*n.r, false));
    case K::kNext:
      return next(normalize(*n.l, neg));
    case K::kUntil: {
      Formula u = until(normalize(*n.l, false), normalize(*n.r, false));
      if (!neg) return u;
      if (u.kind == FormulaKind::kTrue) return Formula::falsity();
      if (u.kind == FormulaKind::kFalse) return Formula::truth();
      not_co_safe(n);
    }
    case K::kEventually: {
      if (!neg) return until(Formula::truth(), normalize(*n.l, false));
      // !F f == G !f
      Formula body = normalize(*n.l, true);
      if (body.kind == FormulaKind::kTrue) return body;
      not_co_safe(n);
    }
    case K::kAlways: {
      if (neg) return until(Formula::truth(), normalize(*n.l, true));
      Formula body = normalize(*n.l, false);
      if (body.kind == FormulaKind::kTrue) return body;
      not_co_safe(n);
    }
  }
  not_co_safe(n);
}

}  // namespace

Formula parse(std::string_view text, std::span<const std::string> atoms) {
  if (atoms.size() > kMaxAtoms) throw std::invalid_argument("too many atoms");
  Parser p(lex(text), atoms);
  RawPtr root = p.parse();
  return normalize(*root, false);
}

}  // namespace dhg::scltl
