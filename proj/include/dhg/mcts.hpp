#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dhg/game.hpp"

// Closed-loop UCT over a sampled simulator. Decision nodes hold simulator
// states (by key); their children are action nodes, whose children are the
// sampled successor decision nodes.
namespace dhg::mcts {

struct Options {
  long budget = 200;                          // simulations per search
  int depth = 50;                             // steps from the root, tree plus rollout
  double exploration = 0.70710678118654752;  // c
  double discount = 0.8;
};

struct Node {
  int parent = -1;
  int action = -1;         // action nodes only
  std::uint64_t key = 0;   // decision nodes only
  int depth = 0;           // steps from the root
  bool decision = true;
  bool terminal = false;
  long visits = 0;
  double total = 0.0;
  std::vector<int> children;
  std::vector<int> untried;  // descending, so the lowest id is popped first

  double mean() const { return visits > 0 ? total / static_cast<double>(visits) : 0.0; }
};

class Tree {
 public:
  int add_root(std::uint64_t key, std::vector<int> actions, bool terminal);
  int add_action(int parent, int action);
  int add_outcome(int action_node, std::uint64_t key, std::vector<int> actions, bool terminal);
  // Successor of an action node with this key, or -1.
  int find_outcome(int action_node, std::uint64_t key) const;

  // UCB1 over the action children of decision node v; throws std::logic_error
  // when a child has no visits. Ties go to the lowest action id.
  int best_child(int v, double c) const;
  // Adds one visit and `ret` to every node from leaf up to the root.
  void backup(int leaf, double ret);
  // Root action with the highest mean, lowest id on ties.
  int best_action() const;

  // First node whose visit count disagrees with its children, or -1. Action
  // nodes and the root: N = sum of children. Other decision nodes with
  // children: N = 1 + sum (the visit that created them).
  int inconsistent_node() const;

  const Node& operator[](int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  Node& operator[](int i) { return nodes_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  int add(Node n);
  std::vector<Node> nodes_;
};

// What search needs from a simulator. P2's move and the task automaton live
// inside step(); accepting() means P1's task is done. A simulator may also
// provide rollout_action(state, rng); rollouts are uniform otherwise.
template <class S>
concept Simulator = requires(const S& sim, const typename S::State& st, int a, Rng& rng) {
  { sim.actions(st) } -> std::convertible_to<std::vector<int>>;
  { sim.step(st, a, rng) } -> std::convertible_to<typename S::State>;
  { sim.accepting(st) } -> std::convertible_to<bool>;
  { sim.terminal(st) } -> std::convertible_to<bool>;
  { sim.key(st) } -> std::convertible_to<std::uint64_t>;
};

struct SearchResult {
  int action = -1;
  Tree tree;
};

namespace detail {

// Return of reaching an accepting state at step `depth` from the root.
inline double reward_at(int depth, double discount) { return std::pow(discount, depth - 1); }

template <Simulator S>
double rollout(const S& sim, typename S::State st, int depth, const Options& opt, Rng& rng) {
  while (depth < opt.depth && !sim.terminal(st)) {
    int a;
    if constexpr (requires { { sim.rollout_action(st, rng) } -> std::convertible_to<int>; }) {
      a = sim.rollout_action(st, rng);
    } else {
      std::vector<int> acts = sim.actions(st);
      a = acts[static_cast<std::size_t>(rng() % acts.size())];
    }
    st = sim.step(st, a, rng);
    ++depth;
    if (sim.accepting(st)) return reward_at(depth, opt.discount);
  }
  return 0.0;
}

}  // namespace detail

template <Simulator S>
SearchResult search(const S& sim, const typename S::State& root, const Options& opt, Rng& rng) {
  if (opt.budget < 1) throw std::invalid_argument("mcts: budget must be positive");
  if (opt.depth < 1) throw std::invalid_argument("mcts: depth must be positive");
  SearchResult out;
  Tree& tree = out.tree;
  tree.add_root(sim.key(root), sim.actions(root), sim.terminal(root));
  if (tree[0].untried.empty() && !tree[0].terminal) throw std::invalid_argument("mcts: no action at the root");
  if (!tree[0].terminal && tree[0].untried.size() == 1) {
    out.action = tree[0].untried.front();
    return out;
  }

  for (long it = 0; it < opt.budget; ++it) {
    typename S::State st = root;
    int v = 0;
    double ret = 0.0;
    for (;;) {
      const Node& node = tree[v];
      if (node.terminal) {
        ret = v != 0 && sim.accepting(st) ? detail::reward_at(node.depth, opt.discount) : 0.0;
        break;
      }
      if (node.depth >= opt.depth) break;
      bool fresh = !node.untried.empty();
      int a_node;
      if (fresh) {
        int a = tree[v].untried.back();
        tree[v].untried.pop_back();
        a_node = tree.add_action(v, a);
      } else {
        a_node = tree.best_child(v, opt.exploration);
      }
      st = sim.step(st, tree[a_node].action, rng);
      std::uint64_t k = sim.key(st);
      int w = fresh ? -1 : tree.find_outcome(a_node, k);
      if (w < 0) {
        w = tree.add_outcome(a_node, k, sim.actions(st), sim.terminal(st));
        const Node& leaf = tree[w];
        if (sim.accepting(st)) ret = detail::reward_at(leaf.depth, opt.discount);
        else if (!leaf.terminal) ret = detail::rollout(sim, st, leaf.depth, opt, rng);
        v = w;
        break;
      }
      v = w;
    }
    tree.backup(v, ret);
  }
  out.action = tree.best_action();
  return out;
}

}  // namespace dhg::mcts
