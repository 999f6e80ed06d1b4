#include "dhg/solvers.hpp"

namespace dhg {

SubgoalGame::SubgoalGame(const ConcurrentGame& game, int goal_atom, std::function<bool(Symbol)> unsafe)
    : game_(&game) {
  const int n = game.num_states();
  absorbing_.assign(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) {
    Symbol l = game.label(s);
    if (((l >> goal_atom) & 1u) || unsafe(l)) absorbing_[static_cast<std::size_t>(s)] = 1;
  }
  payoff_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(game.num_p1_actions()) *
                     static_cast<std::size_t>(game.num_p2_actions()),
                 0.0);
  for (int s = 0; s < n; ++s) {
    if (absorbing_[static_cast<std::size_t>(s)]) continue;
    for (int a1 : game.p1_actions(s))
      for (int a2 : game.p2_actions(s)) {
        SuccessorRow r = game.successors(s, a1, a2);
        double u = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
          if (game.holds(r.next[i], goal_atom)) u += r.prob[i];
        payoff_[game.row(s, a1, a2)] = u;
      }
  }
}

}  // namespace dhg
