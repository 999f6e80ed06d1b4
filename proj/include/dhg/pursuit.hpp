#pragma once

#include <span>
#include <string>
#include <vector>

#include "dhg/hypergame.hpp"
#include "dhg/mcts.hpp"
#include "dhg/opponent.hpp"
#include "dhg/worlds.hpp"

// Online deceptive play in the pursuit grid: P2 infers P1's waypoint with the
// windowed detector and answers with level-k policies; P1 plans with UCT.
namespace dhg {

// p1 (proximity) and p2 (control area) both hold.
inline bool pursuit_caught(Symbol l) { return (l & 3u) == 3u; }

struct WaypointModel {
  std::string waypoint;
  LevelStack stack;
};

std::vector<WaypointModel> build_waypoint_models(const GridWorld& world, std::span<const std::string> waypoints,
                                                 int max_level, const SoftViOptions& options);

// One hypothesis per waypoint: P1 at level p2_level - 1 heading there, P2 at
// p2_level answering it.
std::vector<Hypothesis> level_k_hypotheses(std::span<const WaypointModel> models, int p2_level);

class PursuitSimulator {
 public:
  struct State {
    int s = 0;
    int q = 0;
    int last_a2 = -1;
    Cusum detector;
  };

  // guided: rollouts head for the nearest waypoint that advances the
  // automaton (random move with probability `noise`); otherwise uniform.
  PursuitSimulator(const GridWorld& world, const scltl::Dfa& task, const HypothesisSpace& space, const CusumConfig& detector,
                   bool guided = true, double noise = 0.2);

  State start(int s0) const;
  // Deterministic update from an observed step.
  void advance(State& st, const Observation& y) const;

  std::vector<int> actions(const State& st) const;
  State step(const State& st, int a1, Rng& rng) const;
  bool accepting(const State& st) const { return task_->accepting(st.q); }
  bool terminal(const State& st) const { return task_->terminal(st.q); }
  std::uint64_t key(const State& st) const;
  int rollout_action(const State& st, Rng& rng) const;

  // Shortest P1 path length to waypoint index w (ignoring P2), -1 if unreachable.
  int distance(int w, Cell c) const;

 private:
  const GridWorld* world_;
  const scltl::Dfa* task_;
  const HypothesisSpace* space_;
  CusumConfig detector_;
  bool guided_;
  double noise_;
  std::vector<std::vector<int>> dist_;     // per waypoint atom, per cell
  std::vector<std::vector<int>> targets_;  // per automaton state, waypoint indices that advance it
  std::vector<int> waypoint_atom_;
};

// P1 replanning with UCT at every step on its copy of P2's detector.
class MctsActor : public Actor {
 public:
  MctsActor(const PursuitSimulator& sim, const mcts::Options& options) : sim_(&sim), options_(options) {}
  void begin(int s0) override { state_ = sim_->start(s0); }
  int act(int s, Rng& rng) override;
  void observe(const Observation& y) override { sim_->advance(*state_, y); }
  const PursuitSimulator::State& tracked() const { return *state_; }

 private:
  const PursuitSimulator* sim_;
  mcts::Options options_;
  std::optional<PursuitSimulator::State> state_;
};

}  // namespace dhg
