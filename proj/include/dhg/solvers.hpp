#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dhg/game.hpp"
#include "dhg/profile.hpp"
#include "dhg/scltl.hpp"

namespace dhg {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Zero-sum matrix games. The row player maximizes.

struct MatrixGameSolution {
  double value = 0.0;
  std::vector<double> row;
  std::vector<double> col;
};

// `payoff` is row-major rows x cols.
MatrixGameSolution solve_matrix_game(std::span<const double> payoff, int rows, int cols);

// Pure saddle point if one exists (value, row, col), else nullopt-like flag.
struct SaddlePoint {
  bool found = false;
  double value = 0.0;
  int row = -1;
  int col = -1;
};
SaddlePoint find_saddle(std::span<const double> payoff, int rows, int cols);

// ---------------------------------------------------------------------------
// Finite MDPs with a reachability objective.

class Mdp {
 public:
  class Builder {
   public:
    int add_state();
    // Appends a choice to the most recently added state.
    void add_choice(int action, const SuccessorList& successors);
    void set_target(int s) { mark(s, 1); }
    void set_dead(int s) { mark(s, 2); }
    Mdp finish();

   private:
    void mark(int s, char k);
    std::vector<int> state_off_{0};
    std::vector<int> action_;
    std::vector<std::size_t> choice_off_{0};
    std::vector<std::int32_t> next_;
    std::vector<double> prob_;
    std::vector<char> kind_;
  };

  int num_states() const { return static_cast<int>(kind_.size()); }
  // Choices of state s are [choice_begin(s), choice_end(s)).
  int choice_begin(int s) const { return state_off_[static_cast<std::size_t>(s)]; }
  int choice_end(int s) const { return state_off_[static_cast<std::size_t>(s) + 1]; }
  int action(int c) const { return action_[static_cast<std::size_t>(c)]; }
  SuccessorRow successors(int c) const {
    std::size_t b = choice_off_[static_cast<std::size_t>(c)], e = choice_off_[static_cast<std::size_t>(c) + 1];
    return {std::span<const std::int32_t>(next_).subspan(b, e - b), std::span<const double>(prob_).subspan(b, e - b)};
  }
  bool target(int s) const { return kind_[static_cast<std::size_t>(s)] == 1; }
  bool dead(int s) const { return kind_[static_cast<std::size_t>(s)] == 2; }
  bool absorbing(int s) const { return kind_[static_cast<std::size_t>(s)] != 0 || choice_begin(s) == choice_end(s); }

 private:
  std::vector<int> state_off_;
  std::vector<int> action_;
  std::vector<std::size_t> choice_off_;
  std::vector<std::int32_t> next_;
  std::vector<double> prob_;
  std::vector<char> kind_;
};

struct ViOptions {
  double tolerance = 1e-6;
  int max_sweeps = 100000;
  // Called after every sweep with the current iterate.
  std::function<void(int sweep, std::span<const double> values)> on_sweep;
};

struct MdpSolution {
  std::vector<double> value;
  std::vector<int> policy;  // action id per state, -1 where absorbing
  int sweeps = 0;
  int improvement_rounds = 0;
};

// Maximum probability of reaching a target state. Value iteration from zero,
// then a proper policy is extracted and refined by policy iteration so the
// returned values are those of the returned policy.
MdpSolution mdp_reachability_vi(const Mdp& mdp, const ViOptions& options = {});

// Exact probability of reaching a target under a fixed choice per state
// (-1 allowed on absorbing states), by a sparse linear solve.
std::vector<double> evaluate_policy(const Mdp& mdp, std::span<const int> choice);

// Maximum probability of reaching a target within a step budget, with the
// non-stationary optimal policy (ties to the smallest action id).
struct BoundedPolicy {
  int horizon = 0;
  int num_states = 0;
  std::vector<double> value;         // with the full budget, per state
  std::vector<std::int16_t> action;  // [(steps_left - 1) * num_states + s], -1 on absorbing states

  int act(int steps_left, int s) const {
    return action[static_cast<std::size_t>(steps_left - 1) * static_cast<std::size_t>(num_states) + static_cast<std::size_t>(s)];
  }
};

BoundedPolicy bounded_reachability(const Mdp& mdp, int horizon);

// ---------------------------------------------------------------------------
// Game x DFA product over every (game state, automaton state) pair.

class ProductGame {
 public:
  ProductGame(const ConcurrentGame& game, const scltl::Dfa& dfa);
  // Both are held by reference.
  ProductGame(ConcurrentGame&&, const scltl::Dfa&) = delete;
  ProductGame(const ConcurrentGame&, scltl::Dfa&&) = delete;

  const ConcurrentGame& game() const { return *game_; }
  const scltl::Dfa& dfa() const { return *dfa_; }
  int num_states() const { return game_->num_states() * nq_; }
  int index(int s, int q) const { return s * nq_ + q; }
  int game_state(int p) const { return p / nq_; }
  int dfa_state(int p) const { return p % nq_; }
  // Product state reached by starting the automaton at game state s.
  int start(int s) const { return index(s, dfa_->next(dfa_->initial(), game_->label(s))); }
  int initial() const { return start(game_->initial()); }
  bool accepting(int p) const { return dfa_->accepting(dfa_state(p)); }
  bool terminal(int p) const { return dfa_->terminal(dfa_state(p)); }

  // E[V(next)] after (a1, a2) at product state p.
  double expect(int p, int a1, int a2, std::span<const double> values) const;
  // Product successors of (p, a1, a2).
  SuccessorList successors(int p, int a1, int a2) const;

 private:
  const ConcurrentGame* game_;
  const scltl::Dfa* dfa_;
  int nq_;
  std::vector<std::int32_t> next_;  // per (q, game entry): product index of the successor
};

// ---------------------------------------------------------------------------
// Concurrent reachability: maximin value and locally optimal mixed strategies
// on the product.

struct ShapleyResult {
  std::vector<double> value;             // per product state
  std::vector<std::vector<double>> p1;   // per product state, over P1 action ids
  std::vector<std::vector<double>> p2;   // per product state, over P2 action ids
  int sweeps = 0;
};

ShapleyResult shapley_vi(const ProductGame& product, const ViOptions& options = {});

// Leader/follower solution where P2 commits to a pure memoryless action and P1
// best-responds. Ties among P2 actions go to the smallest id.
struct StackelbergResult {
  std::vector<double> value;  // per product state
  std::vector<int> p1;        // per product state
  std::vector<int> p2;        // per product state
  int sweeps = 0;

  // Game-state profile read at product state (s, delta(init, L(s))).
  Profile profile(const ProductGame& product) const;
};

StackelbergResult stackelberg_response(const ProductGame& product, const ViOptions& options = {});

// ---------------------------------------------------------------------------
// One-step subgoal game: payoff is the probability the next state satisfies
// the goal atom; states where the goal holds or `unsafe` holds are absorbing.

class SubgoalGame {
 public:
  SubgoalGame(const ConcurrentGame& game, int goal_atom, std::function<bool(Symbol)> unsafe);

  const ConcurrentGame& game() const { return *game_; }
  bool absorbing(int s) const { return absorbing_[static_cast<std::size_t>(s)] != 0; }
  double payoff(int s, int a1, int a2) const { return payoff_[game_->row(s, a1, a2)]; }

 private:
  const ConcurrentGame* game_;
  std::vector<char> absorbing_;
  std::vector<double> payoff_;
};

}  // namespace dhg
