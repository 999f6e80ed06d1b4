#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dhg/game.hpp"

namespace dhg {

int sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("sample_index: weights sum to zero");
  double u = uniform01(rng) * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

ConcurrentGame ConcurrentGame::build(const Shape& shape, const AvailableFn& p1, const AvailableFn& p2,
                                     const SuccessorFn& successors, const LabelFn& label) {
  if (shape.num_states <= 0 || shape.num_p1_actions <= 0 || shape.num_p2_actions <= 0)
    throw std::invalid_argument("game: empty state or action set");
  if (shape.initial < 0 || shape.initial >= shape.num_states) throw std::invalid_argument("game: bad initial state");
  if (shape.atoms.size() > scltl::kMaxAtoms) throw std::invalid_argument("game: too many atoms");

  ConcurrentGame g;
  g.shape_ = shape;
  const auto n = static_cast<std::size_t>(shape.num_states);
  g.p1_off_.push_back(0);
  g.p2_off_.push_back(0);
  g.labels_.resize(n);
  g.row_off_.assign(n * static_cast<std::size_t>(shape.num_p1_actions) * static_cast<std::size_t>(shape.num_p2_actions) + 1, 0);

  SuccessorList buf;
  for (int s = 0; s < shape.num_states; ++s) {
    for (int a = 0; a < shape.num_p1_actions; ++a)
      if (p1(s, a)) g.p1_list_.push_back(a);
    for (int a = 0; a < shape.num_p2_actions; ++a)
      if (p2(s, a)) g.p2_list_.push_back(a);
    g.p1_off_.push_back(static_cast<int>(g.p1_list_.size()));
    g.p2_off_.push_back(static_cast<int>(g.p2_list_.size()));
    if (g.p1_off_[static_cast<std::size_t>(s) + 1] == g.p1_off_[static_cast<std::size_t>(s)] ||
        g.p2_off_[static_cast<std::size_t>(s) + 1] == g.p2_off_[static_cast<std::size_t>(s)])
      throw std::invalid_argument("game: state " + std::to_string(s) + " has no available action");
    g.labels_[static_cast<std::size_t>(s)] = label(s);

    for (int a1 = 0; a1 < shape.num_p1_actions; ++a1) {
      for (int a2 = 0; a2 < shape.num_p2_actions; ++a2) {
        std::size_t r = g.row(s, a1, a2);
        g.row_off_[r] = g.next_.size();
        if (!p1(s, a1) || !p2(s, a2)) continue;
        buf.clear();
        successors(s, a1, a2, buf);
        std::sort(buf.begin(), buf.end());
        double total = 0.0;
        for (std::size_t i = 0; i < buf.size(); ++i) {
          auto [t, p] = buf[i];
          if (t < 0 || t >= shape.num_states) throw std::invalid_argument("game: successor out of range");
          if (p < 0.0) throw std::invalid_argument("game: negative probability");
          total += p;
          if (p == 0.0) continue;
          if (!g.next_.empty() && g.next_.size() > g.row_off_[r] && g.next_.back() == t) {
            g.prob_.back() += p;
          } else {
            g.next_.push_back(t);
            g.prob_.push_back(p);
          }
        }
        if (std::fabs(total - 1.0) > 1e-9)
          throw std::invalid_argument("game: row (" + std::to_string(s) + "," + std::to_string(a1) + "," +
                                      std::to_string(a2) + ") sums to " + std::to_string(total));
      }
    }
  }
  g.row_off_.back() = g.next_.size();
  return g;
}

bool ConcurrentGame::p1_available(int s, int a) const {
  auto acts = p1_actions(s);
  return std::binary_search(acts.begin(), acts.end(), a);
}

bool ConcurrentGame::p2_available(int s, int a) const {
  auto acts = p2_actions(s);
  return std::binary_search(acts.begin(), acts.end(), a);
}

SuccessorRow ConcurrentGame::successors(int s, int a1, int a2) const {
  if (s < 0 || s >= num_states() || a1 < 0 || a1 >= num_p1_actions() || a2 < 0 || a2 >= num_p2_actions())
    throw std::out_of_range("game: successors index out of range");
  std::size_t r = row(s, a1, a2);
  std::size_t b = row_off_[r], e = row_off_[r + 1];
  return {std::span<const std::int32_t>(next_).subspan(b, e - b), std::span<const double>(prob_).subspan(b, e - b)};
}

double ConcurrentGame::probability(int s, int a1, int a2, int next) const {
  SuccessorRow row = successors(s, a1, a2);
  auto it = std::lower_bound(row.next.begin(), row.next.end(), next);
  if (it == row.next.end() || *it != next) return 0.0;
  return row.prob[static_cast<std::size_t>(it - row.next.begin())];
}

int ConcurrentGame::atom_index(const std::string& name) const {
  auto it = std::find(shape_.atoms.begin(), shape_.atoms.end(), name);
  if (it == shape_.atoms.end()) throw std::invalid_argument("game: unknown atom '" + name + "'");
  return static_cast<int>(it - shape_.atoms.begin());
}

int ConcurrentGame::step(int s, int a1, int a2, Rng& rng) const {
  SuccessorRow row = successors(s, a1, a2);
  if (row.empty())
    throw std::invalid_argument("game: action pair (" + std::to_string(a1) + "," + std::to_string(a2) +
                                ") unavailable at state " + std::to_string(s));
  return row.next[static_cast<std::size_t>(sample_index(row.prob, rng))];
}

void validate_history(const ConcurrentGame& game, const History& h) {
  if (h.states.empty() || h.states.size() != h.actions.size() + 1)
    throw std::invalid_argument("history: expected one more state than actions");
  for (std::size_t i = 0; i < h.actions.size(); ++i) {
    int s = h.states[i];
    const JointAction& a = h.actions[i];
    if (!game.p1_available(s, a.p1) || !game.p2_available(s, a.p2))
      throw std::invalid_argument("history: unavailable action at step " + std::to_string(i));
    if (game.probability(s, a.p1, a.p2, h.states[i + 1]) <= 0.0)
      throw std::invalid_argument("history: impossible transition at step " + std::to_string(i));
  }
}

std::vector<Symbol> label_word(const ConcurrentGame& game, std::span<const int> states) {
  std::vector<Symbol> w;
  w.reserve(states.size());
  for (int s : states) w.push_back(game.label(s));
  return w;
}

}  // namespace dhg
