#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "dhg/scltl.hpp"

namespace dhg::scltl {

Dfa::Dfa(std::vector<std::string> atoms, int initial, std::vector<int> delta, std::vector<bool> accepting)
    : atoms_(std::move(atoms)), initial_(initial), delta_(std::move(delta)), accepting_(std::move(accepting)) {
  if (delta_.size() != accepting_.size() * num_symbols()) throw std::invalid_argument("dfa: table size mismatch");
  for (int t : delta_)
    if (t < 0 || t >= num_states()) throw std::invalid_argument("dfa: transition out of range");
  if (initial_ < 0 || initial_ >= num_states()) throw std::invalid_argument("dfa: bad initial state");
  find_sink();
}

void Dfa::find_sink() {
  // Backward reachability from accepting states; the dead states of a minimal
  // DFA collapse to one.
  const int n = num_states();
  const std::size_t k = num_symbols();
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q)
    for (std::size_t a = 0; a < k; ++a) pred[static_cast<std::size_t>(next(q, static_cast<Symbol>(a)))].push_back(q);
  std::vector<bool> live(static_cast<std::size_t>(n), false);
  std::deque<int> work;
  for (int q = 0; q < n; ++q)
    if (accepting(q)) {
      live[static_cast<std::size_t>(q)] = true;
      work.push_back(q);
    }
  while (!work.empty()) {
    int q = work.front();
    work.pop_front();
    for (int p : pred[static_cast<std::size_t>(q)])
      if (!live[static_cast<std::size_t>(p)]) {
        live[static_cast<std::size_t>(p)] = true;
        work.push_back(p);
      }
  }
  sink_.reset();
  for (int q = 0; q < n; ++q)
    if (!live[static_cast<std::size_t>(q)]) {
      sink_ = q;
      break;
    }
}

std::vector<int> Dfa::run(std::span<const Symbol> word) const {
  std::vector<int> states;
  states.reserve(word.size() + 1);
  int q = initial_;
  states.push_back(q);
  for (Symbol s : word) {
    if (s >= num_symbols()) throw std::out_of_range("symbol outside alphabet");
    q = next(q, s);
    states.push_back(q);
  }
  return states;
}

bool Dfa::accepts(std::span<const Symbol> word) const { return accepting(run(word).back()); }

std::vector<std::pair<int, int>> Dfa::distinct_edges() const {
  std::vector<std::pair<int, int>> edges;
  for (int q = 0; q < num_states(); ++q) {
    if (sink_ && *sink_ == q) continue;
    for (std::size_t a = 0; a < num_symbols(); ++a) edges.emplace_back(q, next(q, static_cast<Symbol>(a)));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Symbol Dfa::symbol_of(std::span<const std::string> true_atoms) const {
  Symbol s = 0;
  for (const auto& name : true_atoms) {
    auto it = std::find(atoms_.begin(), atoms_.end(), name);
    if (it == atoms_.end()) throw std::invalid_argument("unknown atom '" + name + "'");
    s |= Symbol{1} << (it - atoms_.begin());
  }
  return s;
}

std::string Dfa::dump() const {
  std::ostringstream os;
  os << "states " << num_states() << "\nap ";
  for (std::size_t i = 0; i < atoms_.size(); ++i) os << (i ? "," : "") << atoms_[i];
  os << "\ninit " << initial_ << "\naccept ";
  bool first = true;
  for (int q = 0; q < num_states(); ++q)
    if (accepting(q)) {
      os << (first ? "" : ",") << q;
      first = false;
    }
  os << "\nsink ";
  if (sink_) os << *sink_;
  else os << "none";
  os << "\n";
  for (int q = 0; q < num_states(); ++q)
    for (std::size_t a = 0; a < num_symbols(); ++a) os << "trans " << q << " " << a << " " << next(q, static_cast<Symbol>(a)) << "\n";
  return os.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

Dfa Dfa::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = -1, init = 0;
  std::vector<std::string> atoms;
  std::vector<bool> acc;
  std::vector<int> delta;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::string rest;
    std::getline(ls >> std::ws, rest);
    if (key == "states") {
      n = std::stoi(rest);
    } else if (key == "ap") {
      atoms = split_csv(rest);
    } else if (key == "init") {
      init = std::stoi(rest);
    } else if (key == "accept") {
      if (n < 0) throw std::invalid_argument("dfa dump: 'states' must come first");
      acc.assign(static_cast<std::size_t>(n), false);
      for (const auto& q : split_csv(rest)) acc.at(static_cast<std::size_t>(std::stoi(q))) = true;
    } else if (key == "sink") {
      // derived on load
    } else if (key == "trans") {
      if (n < 0) throw std::invalid_argument("dfa dump: 'states' must come first");
      std::size_t k = std::size_t{1} << atoms.size();
      if (delta.empty()) delta.assign(static_cast<std::size_t>(n) * k, -1);
      std::istringstream ts(rest);
      std::size_t q, a;
      int t;
      if (!(ts >> q >> a >> t) || q >= static_cast<std::size_t>(n) || a >= k)
        throw std::invalid_argument("dfa dump: bad transition line '" + line + "'");
      delta[q * k + a] = t;
    } else {
      throw std::invalid_argument("dfa dump: unknown key '" + key + "'");
    }
  }
  if (n <= 0 || acc.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("dfa dump: incomplete header");
  if (std::find(delta.begin(), delta.end(), -1) != delta.end()) throw std::invalid_argument("dfa dump: incomplete table");
  return Dfa(std::move(atoms), init, std::move(delta), std::move(acc));
}

// ---------------------------------------------------------------------------
// Compilation: formula progression gives an NFA whose states are conjunctions
// of obligations; subset construction and minimization follow.

namespace {

using Clause = std::vector<int>;  // sorted obligation ids; empty means satisfied
using Dnf = std::vector<Clause>;  // empty means unsatisfiable

void normalize(Dnf& d) {
  for (auto& c : d) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  std::sort(d.begin(), d.end(), [](const Clause& a, const Clause& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  d.erase(std::unique(d.begin(), d.end()), d.end());
  Dnf kept;
  for (auto& c : d) {
    bool subsumed = false;
    for (const auto& k : kept)
      if (std::includes(c.begin(), c.end(), k.begin(), k.end())) {
        subsumed = true;
        break;
      }
    if (!subsumed) kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end());
  d = std::move(kept);
}

Dnf dnf_or(Dnf a, const Dnf& b) {
  a.insert(a.end(), b.begin(), b.end());
  normalize(a);
  return a;
}

Dnf dnf_and(const Dnf& a, const Dnf& b) {
  Dnf out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) {
      Clause c = x;
      c.insert(c.end(), y.begin(), y.end());
      out.push_back(std::move(c));
    }
  normalize(out);
  return out;
}

struct Node {
  FormulaKind kind;
  int atom, a, b;
  bool operator<(const Node& o) const {
    return std::tie(kind, atom, a, b) < std::tie(o.kind, o.atom, o.a, o.b);
  }
};

class Progression {
 public:
  int intern(const Formula& f) {
    int a = f.args.size() > 0 ? intern(f.args[0]) : -1;
    int b = f.args.size() > 1 ? intern(f.args[1]) : -1;
    Node n{f.kind, f.atom, a, b};
    auto [it, fresh] = ids_.try_emplace(n, static_cast<int>(nodes_.size()));
    if (fresh) nodes_.push_back(n);
    return it->second;
  }

  // Boolean structure of an obligation pushed into DNF.
  Dnf expand(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.kind) {
      case FormulaKind::kTrue:
        return {Clause{}};
      case FormulaKind::kFalse:
        return {};
      case FormulaKind::kAnd:
        return dnf_and(expand(n.a), expand(n.b));
      case FormulaKind::kOr:
        return dnf_or(expand(n.a), expand(n.b));
      default:
        return {Clause{id}};
    }
  }

  const Dnf& progress(int id, Symbol sym) {
    auto key = (static_cast<std::uint64_t>(id) << 32) | sym;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const Node n = nodes_[static_cast<std::size_t>(id)];
    Dnf r;
    switch (n.kind) {
      case FormulaKind::kTrue:
        r = {Clause{}};
        break;
      case FormulaKind::kFalse:
        break;
      case FormulaKind::kAtom:
        if ((sym >> n.atom) & 1u) r = {Clause{}};
        break;
      case FormulaKind::kNegAtom:
        if (!((sym >> n.atom) & 1u)) r = {Clause{}};
        break;
      case FormulaKind::kAnd:
        r = dnf_and(progress(n.a, sym), progress(n.b, sym));
        break;
      case FormulaKind::kOr:
        r = dnf_or(progress(n.a, sym), progress(n.b, sym));
        break;
      case FormulaKind::kNext:
        r = expand(n.a);
        break;
      case FormulaKind::kUntil:
        r = dnf_or(progress(n.b, sym), dnf_and(progress(n.a, sym), Dnf{Clause{id}}));
        break;
    }
    return memo_.emplace(key, std::move(r)).first->second;
  }

  Dnf progress_clause(const Clause& c, Symbol sym) {
    Dnf acc{Clause{}};
    for (int id : c) {
      acc = dnf_and(acc, progress(id, sym));
      if (acc.empty()) break;
    }
    return acc;
  }

 private:
  std::vector<Node> nodes_;
  std::map<Node, int> ids_;
  std::unordered_map<std::uint64_t, Dnf> memo_;
};

struct RawDfa {
  int initial = 0;
  std::vector<int> delta;
  std::vector<bool> accepting;
};

RawDfa subset_construction(const Formula& f, std::size_t num_symbols, std::size_t cap) {
  Progression prog;
  int root = prog.intern(f);

  std::map<Clause, int> clause_ids;
  std::vector<Clause> clauses;
  auto clause_id = [&](const Clause& c) {
    auto [it, fresh] = clause_ids.try_emplace(c, static_cast<int>(clauses.size()));
    if (fresh) clauses.push_back(c);
    return it->second;
  };
  const int satisfied = clause_id(Clause{});

  // A DFA state is a set of alternative clauses. Any set holding the empty
  // clause is accepting and, since acceptance is absorbing, collapses to {empty}.
  auto canon = [&](const Dnf& d) {
    std::vector<int> set;
    for (const auto& c : d) {
      if (c.empty()) return std::vector<int>{satisfied};
      set.push_back(clause_id(c));
    }
    std::sort(set.begin(), set.end());
    return set;
  };

  std::map<std::vector<int>, int> ids;
  std::vector<std::vector<int>> sets;
  RawDfa out;
  auto state_id = [&](std::vector<int> set) {
    auto [it, fresh] = ids.try_emplace(set, static_cast<int>(sets.size()));
    if (fresh) {
      if (sets.size() >= cap) throw ResourceLimitError("dfa exceeds state cap of " + std::to_string(cap));
      bool acc = std::find(set.begin(), set.end(), satisfied) != set.end();
      sets.push_back(std::move(set));
      out.accepting.push_back(acc);
    }
    return it->second;
  };

  out.initial = state_id(canon(prog.expand(root)));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t a = 0; a < num_symbols; ++a) {
      Dnf succ;
      for (int cid : sets[i]) {
        Clause c = clauses[static_cast<std::size_t>(cid)];
        Dnf d = prog.progress_clause(c, static_cast<Symbol>(a));
        succ.insert(succ.end(), d.begin(), d.end());
      }
      normalize(succ);
      int t = state_id(canon(succ));
      out.delta.push_back(t);
    }
  }
  return out;
}

// Hopcroft partition refinement followed by breadth-first renumbering, so
// equal languages produce identical tables.
RawDfa minimize(const RawDfa& in, std::size_t k) {
  const std::size_t n = in.accepting.size();
  // inverse transitions: for symbol a and target t, the sources.
  std::vector<std::vector<std::vector<int>>> inv(k, std::vector<std::vector<int>>(n));
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t a = 0; a < k; ++a) inv[a][static_cast<std::size_t>(in.delta[q * k + a])].push_back(static_cast<int>(q));

  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of(n);
  {
    std::vector<int> acc, rej;
    for (std::size_t q = 0; q < n; ++q) (in.accepting[q] ? acc : rej).push_back(static_cast<int>(q));
    for (auto* b : {&acc, &rej})
      if (!b->empty()) {
        for (int q : *b) block_of[static_cast<std::size_t>(q)] = static_cast<int>(blocks.size());
        blocks.push_back(*b);
      }
  }
  std::deque<std::pair<int, std::size_t>> work;
  std::vector<std::vector<bool>> queued;
  auto enqueue = [&](int b, std::size_t a) {
    if (queued.size() <= static_cast<std::size_t>(b)) queued.resize(static_cast<std::size_t>(b) + 1, std::vector<bool>(k, false));
    if (!queued[static_cast<std::size_t>(b)][a]) {
      queued[static_cast<std::size_t>(b)][a] = true;
      work.emplace_back(b, a);
    }
  };
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t a = 0; a < k; ++a) enqueue(static_cast<int>(b), a);

  std::vector<char> marked(n, 0);
  while (!work.empty()) {
    auto [splitter, a] = work.front();
    work.pop_front();
    queued[static_cast<std::size_t>(splitter)][a] = false;
    std::vector<int> x;
    for (int t : blocks[static_cast<std::size_t>(splitter)])
      for (int p : inv[a][static_cast<std::size_t>(t)])
        if (!marked[static_cast<std::size_t>(p)]) {
          marked[static_cast<std::size_t>(p)] = 1;
          x.push_back(p);
        }
    std::map<int, int> hits;
    for (int p : x) ++hits[block_of[static_cast<std::size_t>(p)]];
    for (auto [b, count] : hits) {
      auto& members = blocks[static_cast<std::size_t>(b)];
      if (static_cast<std::size_t>(count) == members.size()) continue;
      std::vector<int> in_x, out_x;
      for (int q : members) (marked[static_cast<std::size_t>(q)] ? in_x : out_x).push_back(q);
      int nb = static_cast<int>(blocks.size());
      members = std::move(out_x);
      for (int q : in_x) block_of[static_cast<std::size_t>(q)] = nb;
      blocks.push_back(std::move(in_x));
      for (std::size_t c = 0; c < k; ++c) {
        bool b_queued = queued.size() > static_cast<std::size_t>(b) && queued[static_cast<std::size_t>(b)][c];
        if (b_queued) enqueue(nb, c);
        else enqueue(blocks[static_cast<std::size_t>(b)].size() <= blocks[static_cast<std::size_t>(nb)].size() ? b : nb, c);
      }
    }
    for (int p : x) marked[static_cast<std::size_t>(p)] = 0;
  }

  // Renumber blocks in BFS order from the initial block.
  std::vector<int> order(blocks.size(), -1);
  std::vector<int> queue{block_of[static_cast<std::size_t>(in.initial)]};
  order[static_cast<std::size_t>(queue[0])] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    int rep = blocks[static_cast<std::size_t>(queue[i])][0];
    for (std::size_t a = 0; a < k; ++a) {
      int tb = block_of[static_cast<std::size_t>(in.delta[static_cast<std::size_t>(rep) * k + a])];
      if (order[static_cast<std::size_t>(tb)] < 0) {
        order[static_cast<std::size_t>(tb)] = static_cast<int>(queue.size());
        queue.push_back(tb);
      }
    }
  }
  RawDfa out;
  out.initial = 0;
  out.accepting.resize(queue.size());
  out.delta.resize(queue.size() * k);
  for (std::size_t i = 0; i < queue.size(); ++i) {
    int rep = blocks[static_cast<std::size_t>(queue[i])][0];
    out.accepting[i] = in.accepting[static_cast<std::size_t>(rep)];
    for (std::size_t a = 0; a < k; ++a)
      out.delta[i * k + a] = order[static_cast<std::size_t>(block_of[static_cast<std::size_t>(in.delta[static_cast<std::size_t>(rep) * k + a])])];
  }
  return out;
}

}  // namespace

Dfa compile(const Formula& formula, std::vector<std::string> atoms, CompileOptions options) {
  if (atoms.size() > kMaxAtoms) throw std::invalid_argument("too many atoms");
  const std::size_t k = std::size_t{1} << atoms.size();
  RawDfa raw = subset_construction(formula, k, options.max_states);
  RawDfa min = minimize(raw, k);
  return Dfa(std::move(atoms), min.initial, std::move(min.delta), std::move(min.accepting));
}

Dfa compile(std::string_view text, std::vector<std::string> atoms, CompileOptions options) {
  Formula f = parse(text, atoms);
  return compile(f, std::move(atoms), options);
}

}  // namespace dhg::scltl
