#include <string>

#include "dhg/hypergame.hpp"

namespace dhg {

std::optional<int> HyperMdp::find(const HyperState& v) const {
  auto it = ids_.find(v);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

HyperState HyperMdp::advance(const HyperState& v, const Observation& y) {
  HyperState w;
  w.s = y.to;
  w.cls = classes_->extend(v.cls, y);
  w.x = inference_->next(v.x, w.cls);
  w.q = task_->next(v.q, game_->label(y.to));
  return w;
}

HyperMdp HyperMdp::build(const ConcurrentGame& game, const scltl::Dfa& task, const HypothesisSpace& space,
                         const HyperOptions& options) {
  if (task.atoms() != game.atoms()) throw std::invalid_argument("hypergame: task automaton and game use different atoms");
  if (&space.game() != &game) throw std::invalid_argument("hypergame: hypothesis space belongs to another game");
  HyperMdp h;
  h.game_ = &game;
  h.task_ = &task;
  h.space_ = &space;
  h.options_ = options;
  h.classes_ = std::make_unique<WindowClasses>(options.detector.window);
  h.inference_ = std::make_unique<WindowInference>(space, *h.classes_, options.detector);

  auto intern = [&h, cap = options.max_states](const HyperState& v) {
    auto [it, fresh] = h.ids_.emplace(v, static_cast<int>(h.states_.size()));
    if (fresh) {
      if (h.states_.size() >= cap)
        throw StateCapExceeded("hypergame exceeds the state cap of " + std::to_string(cap));
      h.states_.push_back(v);
    }
    return it->second;
  };

  const int s0 = game.initial();
  intern({s0, WindowClasses::empty(), task.next(task.initial(), game.label(s0)), space.initial()});

  Mdp::Builder b;
  SuccessorList row;
  for (std::size_t i = 0; i < h.states_.size(); ++i) {
    const HyperState v = h.states_[i];
    const int id = b.add_state();
    if (task.accepting(v.q)) {
      b.set_target(id);
      continue;
    }
    if (task.terminal(v.q)) {
      b.set_dead(id);
      continue;
    }
    auto sigma = space[v.x].profile.p2(v.s);
    for (int a1 : game.p1_actions(v.s)) {
      row.clear();
      for (int a2 : game.p2_actions(v.s)) {
        double w = sigma[static_cast<std::size_t>(a2)];
        if (w <= 0.0) continue;
        SuccessorRow r = game.successors(v.s, a1, a2);
        for (std::size_t k = 0; k < r.size(); ++k)
          row.emplace_back(intern(h.advance(v, {v.s, a1, a2, r.next[k]})), w * r.prob[k]);
      }
      b.add_choice(a1, row);
    }
  }
  h.mdp_ = b.finish();
  return h;
}

std::vector<HyperState> augment(HyperMdp& hyper, const History& h) {
  validate_history(hyper.game(), h);
  const auto& g = hyper.game();
  const auto& task = hyper.task();
  std::vector<HyperState> out;
  HyperState v{h.states.front(), WindowClasses::empty(), task.next(task.initial(), g.label(h.states.front())),
               hyper.space().initial()};
  out.push_back(v);
  for (const Observation& y : observations_of(h)) {
    v = hyper.advance(v, y);
    out.push_back(v);
  }
  return out;
}

DeceptivePolicy synthesize(const HyperMdp& hyper, const ViOptions& options, int horizon) {
  DeceptivePolicy p;
  p.solution = mdp_reachability_vi(hyper.mdp(), options);
  if (horizon > 0) p.bounded = bounded_reachability(hyper.mdp(), horizon);
  for (int id = 0; id < hyper.num_states(); ++id) {
    HyperState key = hyper.state(id);
    key.cls = 0;
    auto [it, fresh] = p.fallback.emplace(key, id);
    if (!fresh && p.solution.value[static_cast<std::size_t>(id)] > p.solution.value[static_cast<std::size_t>(it->second)])
      it->second = id;
  }
  return p;
}

}  // namespace dhg
