#pragma once

// Direct finite-trace evaluation, independent of the automaton construction.
// Positions at or beyond the end of the word behave as a blank letter on which
// every literal (positive or negative) is false.

#include <random>
#include <span>
#include <string>
#include <vector>

#include "dhg/scltl.hpp"

namespace oracle {

using dhg::scltl::Formula;
using dhg::scltl::FormulaKind;
using dhg::scltl::Symbol;

inline bool holds(const Formula& f, std::span<const Symbol> w, std::size_t i) {
  const std::size_t n = w.size();
  switch (f.kind) {
    case FormulaKind::kTrue:
      return true;
    case FormulaKind::kFalse:
      return false;
    case FormulaKind::kAtom:
      return i < n && ((w[i] >> f.atom) & 1u);
    case FormulaKind::kNegAtom:
      return i < n && !((w[i] >> f.atom) & 1u);
    case FormulaKind::kAnd:
      return holds(f.args[0], w, i) && holds(f.args[1], w, i);
    case FormulaKind::kOr:
      return holds(f.args[0], w, i) || holds(f.args[1], w, i);
    case FormulaKind::kNext:
      return holds(f.args[0], w, i < n ? i + 1 : n);
    case FormulaKind::kUntil:
      for (std::size_t j = i; j <= n; ++j) {
        if (holds(f.args[1], w, j)) return true;
        if (!holds(f.args[0], w, j)) return false;
      }
      return false;
  }
  return false;
}

// Random co-safe formula text over atoms a0..a{k-1}.
inline std::string random_formula(std::mt19937_64& rng, int atoms, int depth) {
  std::uniform_int_distribution<int> atom(0, atoms - 1);
  auto leaf = [&] {
    std::uniform_int_distribution<int> neg(0, 2);
    std::string a = "a" + std::to_string(atom(rng));
    return neg(rng) == 0 ? "!" + a : a;
  };
  if (depth == 0) return leaf();
  std::uniform_int_distribution<int> op(0, 6);
  switch (op(rng)) {
    case 0:
      return leaf();
    case 1:
      return "(" + random_formula(rng, atoms, depth - 1) + " & " + random_formula(rng, atoms, depth - 1) + ")";
    case 2:
      return "(" + random_formula(rng, atoms, depth - 1) + " | " + random_formula(rng, atoms, depth - 1) + ")";
    case 3:
      return "X " + random_formula(rng, atoms, depth - 1);
    case 4:
      return "F " + random_formula(rng, atoms, depth - 1);
    default:
      return "(" + random_formula(rng, atoms, depth - 1) + " U " + random_formula(rng, atoms, depth - 1) + ")";
  }
}

inline std::vector<std::string> atom_names(int k) {
  std::vector<std::string> v;
  for (int i = 0; i < k; ++i) v.push_back("a" + std::to_string(i));
  return v;
}

// Calls fn(word) for every word of exactly `len` letters over 2^atoms symbols.
template <class Fn>
void for_each_word(int atoms, std::size_t len, Fn&& fn) {
  const Symbol k = Symbol{1} << atoms;
  std::vector<Symbol> w(len, 0);
  while (true) {
    fn(std::span<const Symbol>(w));
    std::size_t i = 0;
    while (i < len && ++w[i] == k) w[i++] = 0;
    if (i == len) return;
  }
}

}  // namespace oracle
