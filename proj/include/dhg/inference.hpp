#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dhg/game.hpp"
#include "dhg/profile.hpp"

namespace dhg {

// One observed step: the joint action taken at `from` and the state reached.
struct Observation {
  int from = 0;
  int a1 = 0;
  int a2 = 0;
  int to = 0;
  auto operator<=>(const Observation&) const = default;
};

std::vector<Observation> observations_of(const History& h);

// Which action factors enter a hypothesis' likelihood. P2 knows its own
// action, so by default only P1's factor (and the transition) is scored;
// kJoint also multiplies P2's factor under the hypothesis.
enum class LikelihoodModel { kP1Only, kJoint };

struct Hypothesis {
  std::string name;
  std::string formula;
  Profile profile;  // behaviour P2 predicts under this hypothesis
};

class HypothesisSpace {
 public:
  HypothesisSpace(const ConcurrentGame& game, std::vector<Hypothesis> hypotheses, int initial = 0,
                  LikelihoodModel model = LikelihoodModel::kP1Only, double floor = 1e-12);

  const ConcurrentGame& game() const { return *game_; }
  int size() const { return static_cast<int>(hyps_.size()); }
  int initial() const { return initial_; }
  const Hypothesis& operator[](int x) const { return hyps_[static_cast<std::size_t>(x)]; }
  LikelihoodModel model() const { return model_; }
  double floor() const { return floor_; }

  // Model probability of y under hypothesis x, floored.
  double probability(int x, const Observation& y) const;
  // log probability under every hypothesis; out.size() == size().
  void log_likelihoods(const Observation& y, std::span<double> out) const;

 private:
  const ConcurrentGame* game_;
  std::vector<Hypothesis> hyps_;
  int initial_;
  LikelihoodModel model_;
  double floor_;
};

enum class TieRule { kLowestIndex, kUniform };

struct CusumConfig {
  // Observations kept in the sliding window; 0 runs the plain recursive
  // statistic over the whole stream.
  int window = 7;
  double threshold = 0.3;
  TieRule tie = TieRule::kLowestIndex;
  std::uint64_t seed = 0;  // used by kUniform only
};

struct Detection {
  int hypothesis;
  long step;  // 1-based count of observations pushed
};

// Change detector over per-observation log-likelihood rows. In window mode
// the scores are recomputed from zero over the buffered rows relative to the
// current nominal at every step, so the state is (nominal, window) alone.
class Cusum {
 public:
  Cusum(int num_hypotheses, int nominal, const CusumConfig& config);

  // Feeds one row of log-likelihoods. On a crossing the nominal switches to
  // the detected hypothesis and the scores are zeroed.
  std::optional<Detection> push(std::span<const double> loglik);

  int nominal() const { return nominal_; }
  std::span<const double> scores() const { return z_; }
  long steps() const { return steps_; }
  const CusumConfig& config() const { return config_; }
  void reset(int nominal);

 private:
  int nx_;
  int nominal_;
  CusumConfig config_;
  std::vector<double> z_, inc_;
  std::vector<double> buffer_;  // ring of rows, window * nx_
  int head_ = 0, filled_ = 0;
  long steps_ = 0;
  Rng rng_;
};

// Hypothesis after replaying `history` through a detector started at x.
int eta(const HypothesisSpace& space, int x, std::span<const Observation> history, const CusumConfig& config);

// Interned suffix windows: id 0 is the empty history and extend() appends an
// observation, keeping the last `window` of them.
class WindowClasses {
 public:
  explicit WindowClasses(int window);

  int window() const { return window_; }
  int size() const { return static_cast<int>(windows_.size()); }
  static constexpr int empty() { return 0; }
  int extend(int id, const Observation& y);
  std::span<const Observation> observations(int id) const { return windows_[static_cast<std::size_t>(id)]; }
  // Class of an arbitrary history.
  int classify(std::span<const Observation> history);
  // Id of an already interned window (exact contents), if any.
  std::optional<int> find(std::span<const Observation> window) const;

 private:
  struct Hash {
    std::size_t operator()(const std::vector<Observation>& w) const;
  };
  int intern(std::vector<Observation> w);

  int window_;
  std::vector<std::vector<Observation>> windows_;
  std::unordered_map<std::vector<Observation>, int, Hash> ids_;
};

// Next hypothesis given the previous one and the class of the history that
// now includes the latest observation. Memoized; requires the deterministic
// tie rule and a windowed detector.
class WindowInference {
 public:
  WindowInference(const HypothesisSpace& space, WindowClasses& classes, const CusumConfig& config);
  int next(int x, int cls);
  const HypothesisSpace& space() const { return *space_; }
  WindowClasses& classes() { return *classes_; }

 private:
  const HypothesisSpace* space_;
  WindowClasses* classes_;
  CusumConfig config_;
  std::unordered_map<std::uint64_t, int> memo_;
};

}  // namespace dhg
