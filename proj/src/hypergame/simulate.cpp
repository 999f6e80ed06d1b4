#include "dhg/hypergame.hpp"

namespace dhg {

int ProfileActor::act(int s, Rng& rng) {
  return sample_index(player_ == 1 ? profile_->p1(s) : profile_->p2(s), rng);
}

int ProductActor::act(int s, Rng& rng) {
  (void)s;
  return sample_index((*strategy_)[static_cast<std::size_t>(p_)], rng);
}

void ProductActor::observe(const Observation& y) {
  p_ = product_->index(y.to, product_->dfa().next(product_->dfa_state(p_), product_->game().label(y.to)));
}

BsrActor::BsrActor(const HypothesisSpace& space, const CusumConfig& detector)
    : space_(&space), cusum_(space.size(), space.initial(), detector), row_(static_cast<std::size_t>(space.size())) {}

void BsrActor::begin(int) {
  cusum_.reset(space_->initial());
  detections_.clear();
}

int BsrActor::act(int s, Rng& rng) { return sample_index((*space_)[cusum_.nominal()].profile.p2(s), rng); }

void BsrActor::observe(const Observation& y) {
  space_->log_likelihoods(y, row_);
  if (auto d = cusum_.push(row_)) detections_.push_back(*d);
}

DeceptiveActor::DeceptiveActor(const HyperMdp& hyper, const DeceptivePolicy& policy)
    : hyper_(&hyper),
      policy_(&policy),
      cusum_(hyper.space().size(), hyper.space().initial(), hyper.options().detector),
      row_(static_cast<std::size_t>(hyper.space().size())) {}

void DeceptiveActor::begin(int s0) {
  cusum_.reset(hyper_->space().initial());
  window_.clear();
  s_ = s0;
  cls_ = WindowClasses::empty();
  q_ = hyper_->task().next(hyper_->task().initial(), hyper_->game().label(s0));
  t_ = 0;
  off_model_ = 0;
}

int DeceptiveActor::act(int s, Rng&) {
  const auto& g = hyper_->game();
  std::optional<int> id;
  if (cls_ >= 0) id = hyper_->find({s, cls_, q_, cusum_.nominal()});
  if (!id) {
    ++off_model_;
    auto it = policy_->fallback.find({s, 0, q_, cusum_.nominal()});
    if (it != policy_->fallback.end()) id = it->second;
  }
  if (id) {
    const auto& b = policy_->bounded;
    int a = b && t_ < b->horizon ? b->act(b->horizon - t_, *id) : policy_->solution.policy[static_cast<std::size_t>(*id)];
    if (a >= 0) return a;
  }
  return g.p1_actions(s).front();
}

void DeceptiveActor::observe(const Observation& y) {
  hyper_->space().log_likelihoods(y, row_);
  cusum_.push(row_);
  window_.push_back(y);
  if (static_cast<int>(window_.size()) > hyper_->classes().window()) window_.pop_front();
  std::vector<Observation> w(window_.begin(), window_.end());
  cls_ = hyper_->classes().find(w).value_or(-1);
  q_ = hyper_->task().next(q_, hyper_->game().label(y.to));
  s_ = y.to;
  ++t_;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kSatisfied: return "satisfied";
    case Outcome::kFailed: return "failed";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kMismatchStop: return "mismatch-stop";
  }
  return "?";
}

Episode simulate(const ConcurrentGame& game, const scltl::Dfa& task, Actor& p1, Actor& p2, Rng& rng,
                 const SimulationOptions& options) {
  Episode ep;
  int s = options.start.value_or(game.initial());
  ep.history.states.push_back(s);
  int q = task.next(task.initial(), game.label(s));
  p1.begin(s);
  p2.begin(s);
  auto settled = [&]() -> std::optional<Outcome> {
    if (task.accepting(q)) return Outcome::kSatisfied;
    if (task.terminal(q)) return Outcome::kFailed;
    return std::nullopt;
  };
  if (auto o = settled()) {
    ep.outcome = *o;
    return ep;
  }
  for (int t = 0; t < options.horizon; ++t) {
    int a1 = p1.act(s, rng);
    int a2 = p2.act(s, rng);
    int next = game.step(s, a1, a2, rng);
    Observation y{s, a1, a2, next};
    p1.observe(y);
    p2.observe(y);
    ep.history.actions.push_back({a1, a2});
    ep.history.states.push_back(next);
    s = next;
    q = task.next(q, game.label(s));
    if (auto o = settled()) {
      ep.outcome = *o;
      return ep;
    }
    if (options.stop && options.stop(y)) {
      ep.outcome = Outcome::kMismatchStop;
      return ep;
    }
  }
  ep.outcome = Outcome::kTimeout;
  return ep;
}

}  // namespace dhg
