#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dhg/scltl.hpp"

namespace dhg {

using Rng = std::mt19937_64;
using scltl::Symbol;

// Uniform double in [0, 1) from the top 53 bits, identical across platforms.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Index drawn from a discrete distribution (weights need not be normalized).
int sample_index(std::span<const double> weights, Rng& rng);

struct SuccessorRow {
  std::span<const std::int32_t> next;
  std::span<const double> prob;
  std::size_t size() const { return next.size(); }
  bool empty() const { return next.empty(); }
};

using SuccessorList = std::vector<std::pair<int, double>>;

// Two-player concurrent stochastic game with labelled states. Action ids are
// global per player; each state has an availability mask over them.
class ConcurrentGame {
 public:
  struct Shape {
    int num_states = 0;
    int num_p1_actions = 0;
    int num_p2_actions = 0;
    int initial = 0;
    std::vector<std::string> atoms;
  };
  using AvailableFn = std::function<bool(int state, int action)>;
  using SuccessorFn = std::function<void(int state, int a1, int a2, SuccessorList& out)>;
  using LabelFn = std::function<Symbol(int state)>;

  ConcurrentGame() = default;

  // Rows are merged (duplicate targets summed), sorted by target, and checked
  // to sum to one within 1e-9.
  static ConcurrentGame build(const Shape& shape, const AvailableFn& p1, const AvailableFn& p2,
                              const SuccessorFn& successors, const LabelFn& label);

  int num_states() const { return shape_.num_states; }
  int num_p1_actions() const { return shape_.num_p1_actions; }
  int num_p2_actions() const { return shape_.num_p2_actions; }
  int initial() const { return shape_.initial; }
  const std::vector<std::string>& atoms() const { return shape_.atoms; }

  std::span<const int> p1_actions(int s) const { return actions(p1_off_, p1_list_, s); }
  std::span<const int> p2_actions(int s) const { return actions(p2_off_, p2_list_, s); }
  bool p1_available(int s, int a) const;
  bool p2_available(int s, int a) const;

  SuccessorRow successors(int s, int a1, int a2) const;
  double probability(int s, int a1, int a2, int next) const;
  Symbol label(int s) const { return labels_[static_cast<std::size_t>(s)]; }
  bool holds(int s, int atom) const { return (label(s) >> atom) & 1u; }
  int atom_index(const std::string& name) const;

  // Samples s' ~ P(.|s, a1, a2); throws if the pair is not available at s.
  int step(int s, int a1, int a2, Rng& rng) const;

  // Flat successor storage; entry_range gives [begin, end) for one row.
  std::pair<std::size_t, std::size_t> entry_range(int s, int a1, int a2) const {
    std::size_t r = row(s, a1, a2);
    return {row_off_[r], row_off_[r + 1]};
  }
  std::span<const std::int32_t> entry_next() const { return next_; }
  std::span<const double> entry_prob() const { return prob_; }
  std::size_t num_entries() const { return next_.size(); }

  // Row index into the dense (state, a1, a2) table.
  std::size_t row(int s, int a1, int a2) const {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(shape_.num_p1_actions) + static_cast<std::size_t>(a1)) *
               static_cast<std::size_t>(shape_.num_p2_actions) +
           static_cast<std::size_t>(a2);
  }

 private:
  static std::span<const int> actions(const std::vector<int>& off, const std::vector<int>& list, int s) {
    auto b = static_cast<std::size_t>(off[static_cast<std::size_t>(s)]);
    auto e = static_cast<std::size_t>(off[static_cast<std::size_t>(s) + 1]);
    return std::span<const int>(list).subspan(b, e - b);
  }

  Shape shape_;
  std::vector<int> p1_off_, p1_list_, p2_off_, p2_list_;
  std::vector<std::size_t> row_off_;
  std::vector<std::int32_t> next_;
  std::vector<double> prob_;
  std::vector<Symbol> labels_;
};

struct JointAction {
  int p1 = 0;
  int p2 = 0;
  bool operator==(const JointAction&) const = default;
};

// s0 a0 s1 a1 ... sk
struct History {
  std::vector<int> states;
  std::vector<JointAction> actions;

  std::size_t length() const { return actions.size(); }
  int current() const { return states.back(); }
};

// Throws std::invalid_argument when an action is unavailable or a transition
// has zero probability.
void validate_history(const ConcurrentGame& game, const History& h);

std::vector<Symbol> label_word(const ConcurrentGame& game, std::span<const int> states);

}  // namespace dhg
