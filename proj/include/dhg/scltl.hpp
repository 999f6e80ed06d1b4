#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Syntactically co-safe LTL over a declared atom list, compiled to a complete
// minimal DFA that accepts the good prefixes.
namespace dhg::scltl {

// Bit i is set iff atom i holds.
using Symbol = std::uint32_t;

inline constexpr std::size_t kMaxAtoms = 16;

enum class FormulaKind { kTrue, kFalse, kAtom, kNegAtom, kAnd, kOr, kNext, kUntil };

// Positive normal form: negation only on atoms, eventually stored as true U f.
struct Formula {
  FormulaKind kind = FormulaKind::kTrue;
  int atom = -1;
  std::vector<Formula> args;

  static Formula truth() { return {FormulaKind::kTrue, -1, {}}; }
  static Formula falsity() { return {FormulaKind::kFalse, -1, {}}; }
  static Formula atom_of(int a, bool negated = false) {
    return {negated ? FormulaKind::kNegAtom : FormulaKind::kAtom, a, {}};
  }
  static Formula binary(FormulaKind k, Formula l, Formula r) {
    Formula f{k, -1, {}};
    f.args.push_back(std::move(l));
    f.args.push_back(std::move(r));
    return f;
  }
  static Formula next(Formula f) {
    Formula n{FormulaKind::kNext, -1, {}};
    n.args.push_back(std::move(f));
    return n;
  }

  std::string to_string(std::span<const std::string> atoms) const;
  bool operator==(const Formula&) const = default;
};

class FormulaError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kUndeclaredAtom, kNotCoSafe };
  FormulaError(Kind kind, std::size_t position, const std::string& what)
      : std::runtime_error(what), kind_(kind), position_(position) {}
  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grammar: ! & | -> X U F G true false ( ) and identifiers. Binary precedence,
// loosest first: ->, |, &, U. U and -> associate to the right.
Formula parse(std::string_view text, std::span<const std::string> atoms);

class Dfa {
 public:
  Dfa() = default;
  Dfa(std::vector<std::string> atoms, int initial, std::vector<int> delta,
      std::vector<bool> accepting);

  int num_states() const { return static_cast<int>(accepting_.size()); }
  std::size_t num_symbols() const { return std::size_t{1} << atoms_.size(); }
  const std::vector<std::string>& atoms() const { return atoms_; }
  int initial() const { return initial_; }
  int next(int q, Symbol sym) const { return delta_[static_cast<std::size_t>(q) * num_symbols() + sym]; }
  bool accepting(int q) const { return accepting_[static_cast<std::size_t>(q)]; }
  // Non-accepting state that can never reach acceptance, if one exists.
  std::optional<int> sink() const { return sink_; }
  bool terminal(int q) const { return accepting(q) || (sink_ && *sink_ == q); }

  // States visited, starting with the initial state; size is word.size() + 1.
  std::vector<int> run(std::span<const Symbol> word) const;
  bool accepts(std::span<const Symbol> word) const;

  // Distinct (q, q') pairs with q not the sink, self-loops included.
  std::vector<std::pair<int, int>> distinct_edges() const;

  Symbol symbol_of(std::span<const std::string> true_atoms) const;

  std::string dump() const;
  static Dfa load(std::string_view text);

  bool operator==(const Dfa& o) const {
    return atoms_ == o.atoms_ && initial_ == o.initial_ && delta_ == o.delta_ &&
           accepting_ == o.accepting_;
  }

 private:
  void find_sink();

  std::vector<std::string> atoms_;
  int initial_ = 0;
  std::vector<int> delta_;
  std::vector<bool> accepting_;
  std::optional<int> sink_;
};

struct CompileOptions {
  std::size_t max_states = 1'000'000;
};

Dfa compile(const Formula& formula, std::vector<std::string> atoms, CompileOptions options = {});
Dfa compile(std::string_view text, std::vector<std::string> atoms, CompileOptions options = {});

}  // namespace dhg::scltl
