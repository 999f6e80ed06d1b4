#include "dhg/scltl.hpp"

namespace dhg::scltl {

std::string Formula::to_string(std::span<const std::string> atoms) const {
  auto name = [&](int a) {
    return a >= 0 && static_cast<std::size_t>(a) < atoms.size() ? atoms[static_cast<std::size_t>(a)]
                                                                : "?" + std::to_string(a);
  };
  switch (kind) {
    case FormulaKind::kTrue:
      return "true";
    case FormulaKind::kFalse:
      return "false";
    case FormulaKind::kAtom:
      return name(atom);
    case FormulaKind::kNegAtom:
      return "!" + name(atom);
    case FormulaKind::kNext:
      return "X " + args[0].to_string(atoms);
    case FormulaKind::kAnd:
      return "(" + args[0].to_string(atoms) + " & " + args[1].to_string(atoms) + ")";
    case FormulaKind::kOr:
      return "(" + args[0].to_string(atoms) + " | " + args[1].to_string(atoms) + ")";
    case FormulaKind::kUntil:
      if (args[0].kind == FormulaKind::kTrue) return "F " + args[1].to_string(atoms);
      return "(" + args[0].to_string(atoms) + " U " + args[1].to_string(atoms) + ")";
  }
  return {};
}

}  // namespace dhg::scltl
