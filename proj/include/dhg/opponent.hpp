#pragma once

#include <span>
#include <vector>

#include "dhg/game.hpp"
#include "dhg/profile.hpp"
#include "dhg/solvers.hpp"

// Level-k opponent models on subgoal games and Poisson estimation of the
// opponent's depth of reasoning.
namespace dhg {

struct SoftViOptions {
  double temperature = 1.0;
  double discount = 0.95;
  double tolerance = 1e-6;
  int max_sweeps = 100000;
};

// Soft best response of `player` (1 maximizes, 2 minimizes the discounted
// subgoal payoff) to the other player's fixed strategy, read from `other`.
// The soft value is taken relative to the uniform policy, so it stays in [0, 1].
struct SoftResponse {
  std::vector<double> value;   // per state
  std::vector<double> policy;  // per state, over the player's action ids
  int sweeps = 0;
};
SoftResponse soft_response(const SubgoalGame& game, int player, const Profile& other, const SoftViOptions& options);

// level[k].p2 is P2's level-k policy and level[k].p1 P1's. Level 0 is uniform
// (or the supplied nominal); level k answers the other player's level k-1.
struct LevelStack {
  std::vector<Profile> level;
  int max_level() const { return static_cast<int>(level.size()) - 1; }
};

LevelStack build_level_stack(const SubgoalGame& game, int max_level, const SoftViOptions& options,
                             const Profile* nominal = nullptr);

// Product over steps of P(s'|s, a) * pi2^(k)(a2|s), each factor floored.
double trajectory_likelihood(const ConcurrentGame& game, const History& h, const Profile& level_policy,
                             double floor = 1e-12);
double trajectory_log_likelihood(const ConcurrentGame& game, const History& h, const Profile& level_policy,
                                 double floor = 1e-12);

// Softmax of r / tau, max-subtracted.
std::vector<double> level_scores(std::span<const double> r, double tau);

double poisson_pmf(int k, double lambda);

// Running mean of the expected level under each score vector.
class PoissonEstimate {
 public:
  explicit PoissonEstimate(int max_level, double lambda0 = 0.0) : max_level_(max_level), lambda_(lambda0) {}
  double update(std::span<const double> sigma);
  double lambda() const { return lambda_; }
  int iterations() const { return iterations_; }
  int max_level() const { return max_level_; }

 private:
  int max_level_;
  double lambda_;
  int iterations_ = 0;
};

// Level scores from raw trajectory probabilities, or from their logs. Raw
// probabilities vanish on long traces and then flatten the softmax.
enum class LevelScoring { kRaw, kLog };

std::vector<double> score_levels(const ConcurrentGame& game, const History& h, const LevelStack& stack, double tau,
                                 LevelScoring scoring = LevelScoring::kRaw);

}  // namespace dhg
