#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dhg/mcts.hpp"

namespace dhg::mcts {

int Tree::add(Node n) {
  nodes_.push_back(std::move(n));
  return size() - 1;
}

int Tree::add_root(std::uint64_t key, std::vector<int> actions, bool terminal) {
  nodes_.clear();
  Node n;
  n.key = key;
  n.terminal = terminal;
  if (!terminal) {
    std::sort(actions.begin(), actions.end(), std::greater<>());
    n.untried = std::move(actions);
  }
  return add(std::move(n));
}

int Tree::add_action(int parent, int action) {
  Node n;
  n.parent = parent;
  n.action = action;
  n.decision = false;
  n.depth = (*this)[parent].depth;
  int id = add(std::move(n));
  (*this)[parent].children.push_back(id);
  return id;
}

int Tree::add_outcome(int action_node, std::uint64_t key, std::vector<int> actions, bool terminal) {
  Node n;
  n.parent = action_node;
  n.key = key;
  n.depth = (*this)[action_node].depth + 1;
  n.terminal = terminal;
  if (!terminal) {
    std::sort(actions.begin(), actions.end(), std::greater<>());
    n.untried = std::move(actions);
  }
  int id = add(std::move(n));
  (*this)[action_node].children.push_back(id);
  return id;
}

int Tree::find_outcome(int action_node, std::uint64_t key) const {
  for (int w : (*this)[action_node].children)
    if ((*this)[w].key == key) return w;
  return -1;
}

int Tree::best_child(int v, double c) const {
  const Node& node = (*this)[v];
  if (node.children.empty()) throw std::logic_error("mcts: best_child on a node without children");
  const double log_n = std::log(static_cast<double>(node.visits));
  int best = -1;
  double best_score = 0.0;
  for (int ch : node.children) {
    const Node& a = (*this)[ch];
    if (a.visits == 0) throw std::logic_error("mcts: best_child with an unvisited child");
    double score = a.mean() + c * std::sqrt(2.0 * log_n / static_cast<double>(a.visits));
    if (best < 0 || score > best_score || (score == best_score && a.action < (*this)[best].action)) {
      best = ch;
      best_score = score;
    }
  }
  return best;
}

void Tree::backup(int leaf, double ret) {
  for (int v = leaf; v >= 0; v = (*this)[v].parent) {
    ++(*this)[v].visits;
    (*this)[v].total += ret;
  }
}

int Tree::best_action() const {
  const Node& root = (*this)[0];
  int best = -1;
  for (int ch : root.children) {
    const Node& a = (*this)[ch];
    if (a.visits == 0) continue;
    if (best < 0 || a.mean() > (*this)[best].mean() || (a.mean() == (*this)[best].mean() && a.action < (*this)[best].action))
      best = ch;
  }
  return best < 0 ? -1 : (*this)[best].action;
}

int Tree::inconsistent_node() const {
  for (int v = 0; v < size(); ++v) {
    const Node& n = (*this)[v];
    long sum = 0;
    for (int ch : n.children) sum += (*this)[ch].visits;
    bool ok = !n.decision || v == 0 ? n.visits == sum : n.children.empty() || n.visits == sum + 1;
    if (!ok) return v;
  }
  return -1;
}

}  // namespace dhg::mcts
