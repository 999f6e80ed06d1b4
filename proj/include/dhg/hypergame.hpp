#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dhg/inference.hpp"
#include "dhg/solvers.hpp"

namespace dhg {

// P1's view of the interaction: game state, suffix-window class of the
// history, task automaton state and P2's current hypothesis.
struct HyperState {
  int s = 0;
  int cls = 0;
  int q = 0;
  int x = 0;
  bool operator==(const HyperState&) const = default;
};

struct HyperStateHash {
  std::size_t operator()(const HyperState& v) const {
    std::uint64_t h = splitmix64(static_cast<std::uint32_t>(v.s));
    h = splitmix64(h ^ static_cast<std::uint32_t>(v.cls));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.q)) << 32 | static_cast<std::uint32_t>(v.x)));
    return static_cast<std::size_t>(h);
  }
};

class StateCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HyperOptions {
  CusumConfig detector;
  std::size_t max_states = 5'000'000;
};

// Finite quotient of P1's hypergame under window equivalence, as an MDP over
// P1's actions with P2 following its hypothesis-dependent strategy.
class HyperMdp {
 public:
  static HyperMdp build(const ConcurrentGame& game, const scltl::Dfa& task, const HypothesisSpace& space,
                        const HyperOptions& options = {});

  const ConcurrentGame& game() const { return *game_; }
  const scltl::Dfa& task() const { return *task_; }
  const HypothesisSpace& space() const { return *space_; }
  const HyperOptions& options() const { return options_; }
  const Mdp& mdp() const { return mdp_; }
  int num_states() const { return static_cast<int>(states_.size()); }
  static constexpr int initial() { return 0; }
  const HyperState& state(int id) const { return states_[static_cast<std::size_t>(id)]; }
  std::optional<int> find(const HyperState& v) const;
  const WindowClasses& classes() const { return *classes_; }

  // Successor hyper state of v after observing y (no interning of states).
  HyperState advance(const HyperState& v, const Observation& y);

 private:
  HyperMdp() = default;
  const ConcurrentGame* game_ = nullptr;
  const scltl::Dfa* task_ = nullptr;
  const HypothesisSpace* space_ = nullptr;
  HyperOptions options_;
  std::unique_ptr<WindowClasses> classes_;
  std::unique_ptr<WindowInference> inference_;
  std::vector<HyperState> states_;
  std::unordered_map<HyperState, int, HyperStateHash> ids_;
  Mdp mdp_;
};

// Hyper states along a history, starting from (s0, empty, delta(init, L(s0)), x0).
std::vector<HyperState> augment(HyperMdp& hyper, const History& h);

struct DeceptivePolicy {
  MdpSolution solution;  // unbounded optimum
  // Step-bounded optimum used for play when episodes have a horizon. The
  // stationary optimum may idle for a very long time in value-preserving
  // loops, which a finite episode cannot afford.
  std::optional<BoundedPolicy> bounded;
  // best state id per (s, q, x), used when the tracked state was never built
  std::unordered_map<HyperState, int, HyperStateHash> fallback;
  double initial_value() const { return solution.value[static_cast<std::size_t>(HyperMdp::initial())]; }
  double bounded_initial_value() const {
    return bounded ? bounded->value[static_cast<std::size_t>(HyperMdp::initial())] : initial_value();
  }
};

// horizon > 0 also computes the step-bounded policy.
DeceptivePolicy synthesize(const HyperMdp& hyper, const ViOptions& options = {}, int horizon = 0);

// ---------------------------------------------------------------------------
// Online play.

class Actor {
 public:
  virtual ~Actor() = default;
  virtual void begin(int /*s0*/) {}
  virtual int act(int s, Rng& rng) = 0;
  virtual void observe(const Observation& /*y*/) {}
};

// Samples a memoryless profile row.
class ProfileActor : public Actor {
 public:
  ProfileActor(int player, const Profile& profile) : player_(player), profile_(&profile) {}
  int act(int s, Rng& rng) override;

 private:
  int player_;
  const Profile* profile_;
};

// Plays a per-product-state mixed strategy while tracking the automaton.
class ProductActor : public Actor {
 public:
  ProductActor(int player, const ProductGame& product, const std::vector<std::vector<double>>& strategy)
      : player_(player), product_(&product), strategy_(&strategy) {}
  void begin(int s0) override { p_ = product_->start(s0); }
  int act(int s, Rng& rng) override;
  void observe(const Observation& y) override;

 private:
  int player_;
  const ProductGame* product_;
  const std::vector<std::vector<double>>* strategy_;
  int p_ = 0;
};

// P2 acting on its current hypothesis, updated by the windowed detector.
class BsrActor : public Actor {
 public:
  BsrActor(const HypothesisSpace& space, const CusumConfig& detector);
  void begin(int s0) override;
  int act(int s, Rng& rng) override;
  void observe(const Observation& y) override;
  int hypothesis() const { return cusum_.nominal(); }
  const std::vector<Detection>& detections() const { return detections_; }

 private:
  const HypothesisSpace* space_;
  Cusum cusum_;
  std::vector<double> row_;
  std::vector<Detection> detections_;
};

// P1 following the synthesized policy, tracking P2's hypothesis with its own
// copy of the detector.
class DeceptiveActor : public Actor {
 public:
  DeceptiveActor(const HyperMdp& hyper, const DeceptivePolicy& policy);
  void begin(int s0) override;
  int act(int s, Rng& rng) override;
  void observe(const Observation& y) override;
  HyperState tracked() const { return {s_, cls_, q_, cusum_.nominal()}; }
  // steps at which the tracked state was not in the built model
  int off_model_steps() const { return off_model_; }

 private:
  const HyperMdp* hyper_;
  const DeceptivePolicy* policy_;
  Cusum cusum_;
  std::vector<double> row_;
  std::deque<Observation> window_;
  int s_ = 0, cls_ = 0, q_ = 0;
  int t_ = 0;
  int off_model_ = 0;
};

enum class Outcome { kSatisfied, kFailed, kTimeout, kMismatchStop };
const char* outcome_name(Outcome o);

struct Episode {
  History history;
  Outcome outcome = Outcome::kTimeout;
};

struct SimulationOptions {
  int horizon = 200;
  std::optional<int> start;  // game initial state when empty
  // Called after every observation; returning true stops the episode.
  std::function<bool(const Observation&)> stop;
};

Episode simulate(const ConcurrentGame& game, const scltl::Dfa& task, Actor& p1, Actor& p2, Rng& rng,
                 const SimulationOptions& options = {});

}  // namespace dhg
