#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dhg/hypergame.hpp"

// Likelihood-ratio tests of P1's model of P2 against observed play.
namespace dhg {

// Inverse chi-square CDF by bisection on the regularized incomplete gamma.
double chi2_quantile(double p, int dof);

enum class TestKind { kMatrix, kPolicy };
const char* test_name(TestKind k);

struct TestReport {
  TestKind kind = TestKind::kMatrix;
  double statistic = 0.0;  // +inf when the model gives an observed step zero probability
  int dof = 1;             // sum over visited states of max(1, distinct successors - 1)
  int observed_pairs = 0;  // distinct (state, successor) or (state, action) pairs
  int observed_states = 0;
  double alpha = 0.05;
  double threshold = 0.0;
  bool reject = false;
  long step = 0;
};

// Distinct successors per visited state, tracking how many have exactly one.
class SuccessorSpread {
 public:
  void operator()(std::uint64_t state, bool new_pair);
  int single() const { return single_; }

 private:
  std::unordered_map<std::uint64_t, int> distinct_;
  int single_ = 0;
};

// Sparse row-stochastic matrix over hyper-MDP state ids.
class MarkovChain {
 public:
  MarkovChain() = default;
  explicit MarkovChain(std::vector<SuccessorList> rows);
  int num_states() const { return static_cast<int>(off_.size()) - 1; }
  double probability(int from, int to) const;
  SuccessorRow row(int from) const;

 private:
  std::vector<std::size_t> off_{0};
  std::vector<std::int32_t> next_;
  std::vector<double> prob_;
};

// Chain followed by the hyper MDP when P1 plays `action[v]` (an action id;
// absorbing states loop on themselves).
MarkovChain induce_model_chain(const Mdp& mdp, std::span<const int> action);

// Streaming transition-matrix test: the MLE chain of the observed pairs
// against the model probabilities, pairs counted with multiplicity.
class MatrixTest {
 public:
  explicit MatrixTest(double alpha = 0.05) : alpha_(alpha) {}
  // `model_prob` is the model probability of from -> to at this step.
  const TestReport& push(std::uint64_t from, std::uint64_t to, double model_prob);
  const TestReport& report() const { return report_; }

 private:
  double alpha_;
  std::unordered_map<std::uint64_t, long> state_n_;
  std::unordered_map<std::uint64_t, long> pair_n_;
  SuccessorSpread track_;
  double nlogn_pairs_ = 0.0, nlogn_states_ = 0.0, model_ll_ = 0.0;
  bool impossible_ = false;
  TestReport report_;
};

TestReport matrix_test(std::span<const int> trace, const MarkovChain& model, double alpha = 0.05);

// Streaming action-level test of P2's predicted policy against the empirical
// action frequencies per state.
class PolicyTest {
 public:
  explicit PolicyTest(double alpha = 0.05, double floor = 1e-12) : alpha_(alpha), floor_(floor) {}
  const TestReport& push(std::uint64_t state, int action, double predicted_prob);
  const TestReport& report() const { return report_; }

 private:
  double alpha_, floor_;
  std::unordered_map<std::uint64_t, long> state_n_;
  std::unordered_map<std::uint64_t, long> pair_n_;
  SuccessorSpread track_;
  double nlogn_pairs_ = 0.0, nlogn_states_ = 0.0, model_ll_ = 0.0;
  TestReport report_;
};

// P2's predicted action probability at hyper state v.
double predicted_p2(const HyperMdp& hyper, const HyperState& v, int a2);

// Hyper-MDP probability of v -> w under P1's action a1; 0 when either state
// lies outside the built model.
double model_step_probability(const HyperMdp& hyper, const HyperState& v, int a1, const HyperState& w);

std::uint64_t state_key(const HyperState& v);

// Runs alongside an episode, feeding both tests from the observations. The
// tracked state follows the same augmentation the hyper MDP uses.
class MismatchMonitor {
 public:
  MismatchMonitor(HyperMdp& hyper, double alpha, TestKind active);
  void begin(int s0);
  // Returns true once the active test rejects.
  bool observe(const Observation& y);
  const TestReport& matrix() const { return matrix_.report(); }
  const TestReport& policy() const { return policy_.report(); }
  const TestReport& active() const { return kind_ == TestKind::kMatrix ? matrix() : policy(); }
  const HyperState& tracked() const { return v_; }

 private:
  HyperMdp* hyper_;
  TestKind kind_;
  double alpha_;
  MatrixTest matrix_;
  PolicyTest policy_;
  HyperState v_;
};

// Default test: the action-level one when any predicted P2 row is mixed.
TestKind default_test(const HypothesisSpace& space);

}  // namespace dhg
