#include "dhg/pursuit.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

namespace dhg {

std::vector<WaypointModel> build_waypoint_models(const GridWorld& world, std::span<const std::string> waypoints,
                                                 int max_level, const SoftViOptions& options) {
  const ConcurrentGame& g = world.game();
  std::vector<WaypointModel> out;
  for (const std::string& w : waypoints) {
    SubgoalGame sg(g, g.atom_index(w), pursuit_caught);
    out.push_back({w, build_level_stack(sg, max_level, options)});
  }
  return out;
}

std::vector<Hypothesis> level_k_hypotheses(std::span<const WaypointModel> models, int p2_level) {
  std::vector<Hypothesis> out;
  for (const WaypointModel& m : models) {
    if (p2_level < 1 || p2_level > m.stack.max_level())
      throw std::invalid_argument("level_k_hypotheses: P2 level outside the stack");
    Profile p = m.stack.level[static_cast<std::size_t>(p2_level)];
    const Profile& p1 = m.stack.level[static_cast<std::size_t>(p2_level - 1)];
    for (int s = 0; s < p.num_states(); ++s) std::copy(p1.p1(s).begin(), p1.p1(s).end(), p.p1(s).begin());
    out.push_back({m.waypoint, "!(p1 & p2) U " + m.waypoint, std::move(p)});
  }
  return out;
}

PursuitSimulator::PursuitSimulator(const GridWorld& world, const scltl::Dfa& task, const HypothesisSpace& space,
                                   const CusumConfig& detector, bool guided, double noise)
    : world_(&world), task_(&task), space_(&space), detector_(detector), guided_(guided), noise_(noise) {
  const WorldConfig& cfg = world.config();
  const ConcurrentGame& g = world.game();
  if (task.atoms() != g.atoms()) throw std::invalid_argument("pursuit: task atoms differ from the world's");
  const int cells = cfg.width * cfg.height;
  for (const auto& [name, cell] : cfg.waypoints) {
    waypoint_atom_.push_back(g.atom_index(name));
    // a move that changes the cell can always be undone, so BFS from the
    // waypoint gives distances to it
    std::vector<int> d(static_cast<std::size_t>(cells), -1);
    std::deque<Cell> frontier{cell};
    d[static_cast<std::size_t>(cell.y * cfg.width + cell.x)] = 0;
    while (!frontier.empty()) {
      Cell c = frontier.front();
      frontier.pop_front();
      for (int dir = 0; dir < kNumMoves; ++dir) {
        Cell n = world.move(c, dir);
        auto& dn = d[static_cast<std::size_t>(n.y * cfg.width + n.x)];
        if (dn < 0) {
          dn = d[static_cast<std::size_t>(c.y * cfg.width + c.x)] + 1;
          frontier.push_back(n);
        }
      }
    }
    dist_.push_back(std::move(d));
  }
  targets_.resize(static_cast<std::size_t>(task.num_states()));
  for (int q = 0; q < task.num_states(); ++q)
    for (std::size_t w = 0; w < waypoint_atom_.size(); ++w) {
      int t = task.next(q, Symbol{1} << waypoint_atom_[w]);
      if (t != q && !(task.sink() && *task.sink() == t)) targets_[static_cast<std::size_t>(q)].push_back(static_cast<int>(w));
    }
}

int PursuitSimulator::distance(int w, Cell c) const {
  return dist_[static_cast<std::size_t>(w)][static_cast<std::size_t>(c.y * world_->config().width + c.x)];
}

PursuitSimulator::State PursuitSimulator::start(int s0) const {
  return {s0, task_->next(task_->initial(), world_->game().label(s0)), -1, Cusum(space_->size(), space_->initial(), detector_)};
}

void PursuitSimulator::advance(State& st, const Observation& y) const {
  std::vector<double> row(static_cast<std::size_t>(space_->size()));
  space_->log_likelihoods(y, row);
  st.detector.push(row);
  st.s = y.to;
  st.q = task_->next(st.q, world_->game().label(y.to));
  st.last_a2 = y.a2;
}

std::vector<int> PursuitSimulator::actions(const State& st) const {
  auto a = world_->game().p1_actions(st.s);
  return {a.begin(), a.end()};
}

PursuitSimulator::State PursuitSimulator::step(const State& st, int a1, Rng& rng) const {
  const ConcurrentGame& g = world_->game();
  int a2 = sample_index((*space_)[st.detector.nominal()].profile.p2(st.s), rng);
  int to = g.step(st.s, a1, a2, rng);
  State next = st;
  advance(next, {st.s, a1, a2, to});
  return next;
}

std::uint64_t PursuitSimulator::key(const State& st) const {
  return splitmix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(st.s)) << 8) ^
                    static_cast<std::uint64_t>(st.last_a2 + 1));
}

int PursuitSimulator::rollout_action(const State& st, Rng& rng) const {
  const auto& moves = world_->game().p1_actions(st.s);
  const auto& targets = targets_[static_cast<std::size_t>(st.q)];
  if (!guided_ || targets.empty() || uniform01(rng) < noise_) return moves[rng() % moves.size()];
  Cell here = world_->decode_pursuit(st.s).p1;
  int best_d = std::numeric_limits<int>::max();
  int chosen = moves.front(), ties = 0;
  for (int a : moves) {
    Cell n = world_->move(here, a);
    int d = std::numeric_limits<int>::max();
    for (int w : targets) {
      int dw = distance(w, n);
      if (dw >= 0) d = std::min(d, dw);
    }
    if (d < best_d) {
      best_d = d;
      chosen = a;
      ties = 1;
    } else if (d == best_d && rng() % static_cast<std::uint64_t>(++ties) == 0) {
      chosen = a;
    }
  }
  return chosen;
}

int MctsActor::act(int /*s*/, Rng& rng) { return mcts::search(*sim_, *state_, options_, rng).action; }

}  // namespace dhg
