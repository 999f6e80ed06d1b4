#include "dhg/kernels.hpp"
#include "dhg/solvers.hpp"

namespace dhg {

ProductGame::ProductGame(const ConcurrentGame& game, const scltl::Dfa& dfa)
    : game_(&game), dfa_(&dfa), nq_(dfa.num_states()) {
  if (dfa.atoms() != game.atoms()) throw std::invalid_argument("product: automaton and game use different atom lists");
  auto nexts = game.entry_next();
  next_.resize(static_cast<std::size_t>(nq_) * nexts.size());
  for (int q = 0; q < nq_; ++q) {
    std::int32_t* out = next_.data() + static_cast<std::size_t>(q) * nexts.size();
    for (std::size_t e = 0; e < nexts.size(); ++e) {
      int t = nexts[e];
      out[e] = index(t, dfa.next(q, game.label(t)));
    }
  }
}

double ProductGame::expect(int p, int a1, int a2, std::span<const double> values) const {
  auto [b, e] = game_->entry_range(game_state(p), a1, a2);
  const std::size_t base = static_cast<std::size_t>(dfa_state(p)) * game_->num_entries();
  return kernels::active().gather_dot(game_->entry_prob().data() + b, next_.data() + base + b, values.data(), e - b);
}

SuccessorList ProductGame::successors(int p, int a1, int a2) const {
  auto [b, e] = game_->entry_range(game_state(p), a1, a2);
  const std::size_t base = static_cast<std::size_t>(dfa_state(p)) * game_->num_entries();
  SuccessorList out;
  for (std::size_t i = b; i < e; ++i) out.emplace_back(next_[base + i], game_->entry_prob()[i]);
  return out;
}

}  // namespace dhg
