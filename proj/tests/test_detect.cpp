#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "chain_oracle.hpp"
#include "doctest.h"
#include "dhg/detect.hpp"
#include "mdp_oracle.hpp"
#include "toy_worlds.hpp"

using namespace dhg;

namespace {

// Five states, three successors per row with uneven weights.
oracle::Chain spread_chain(Rng& rng) {
  oracle::Chain p(5, std::vector<double>(5, 0.0));
  for (int s = 0; s < 5; ++s) {
    double w[3], t = 0;
    for (double& x : w) t += (x = 0.2 + uniform01(rng));
    for (int k = 0; k < 3; ++k) p[static_cast<std::size_t>(s)][static_cast<std::size_t>((s + k) % 5)] = w[k] / t;
  }
  return p;
}

MarkovChain to_markov(const oracle::Chain& p) {
  std::vector<SuccessorList> rows;
  for (const auto& r : p) {
    SuccessorList row;
    for (std::size_t t = 0; t < r.size(); ++t)
      if (r[t] > 0) row.emplace_back(static_cast<int>(t), r[t]);
    rows.push_back(row);
  }
  return MarkovChain(rows);
}

std::vector<int> sample_trace(const oracle::Chain& p, int length, Rng& rng) {
  std::vector<int> tr{0};
  for (int i = 0; i < length; ++i) tr.push_back(oracle::chain_step(p, tr.back(), rng));
  return tr;
}

// Per-state action distributions over three actions.
using Policy = std::vector<std::vector<double>>;

Policy random_policy(Rng& rng, int states) {
  Policy pol(static_cast<std::size_t>(states));
  for (auto& row : pol) {
    double t = 0;
    row.resize(3);
    for (double& x : row) t += (x = 0.2 + uniform01(rng));
    for (double& x : row) x /= t;
  }
  return pol;
}

TestReport run_policy_test(const Policy& predicted, const Policy& actual, int length, Rng& rng) {
  PolicyTest t;
  for (int i = 0; i < length; ++i) {
    int s = static_cast<int>(rng() % predicted.size());
    int a = sample_index(actual[static_cast<std::size_t>(s)], rng);
    t.push(static_cast<std::uint64_t>(s), a, predicted[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]);
  }
  return t.report();
}

}  // namespace

TEST_CASE("chi-square quantiles") {
  boost::math::chi_squared one(1.0);
  CHECK(chi2_quantile(0.95, 1) == doctest::Approx(3.8414588206941).epsilon(1e-10));
  CHECK(std::abs(chi2_quantile(0.95, 1) - boost::math::quantile(one, 0.95)) < 1e-8);
  CHECK(std::abs(chi2_quantile(0.95, 2) + 2.0 * std::log(0.05)) < 1e-8);
  for (int dof : {200, 1000}) {
    double median = chi2_quantile(0.5, dof);
    CHECK(std::abs(median - (dof - 2.0 / 3.0)) < 0.01 * dof);
  }
  for (int dof = 1; dof < 30; ++dof) {
    boost::math::chi_squared d(dof);
    for (double p : {0.01, 0.5, 0.9, 0.95, 0.999}) CHECK(std::abs(chi2_quantile(p, dof) - boost::math::quantile(d, p)) < 1e-8);
    CHECK(chi2_quantile(0.95, dof + 1) > chi2_quantile(0.95, dof));
    CHECK(chi2_quantile(0.96, dof) > chi2_quantile(0.95, dof));
  }
  CHECK_THROWS_AS(chi2_quantile(1.0, 3), std::domain_error);
  CHECK_THROWS_AS(chi2_quantile(0.5, 0), std::domain_error);
}

TEST_CASE("induced chain follows the chosen action") {
  oracle::SmallMdp m;
  m.n = 3;
  m.target = {0, 0, 1};
  m.choices = {{{{1, 1.0}}, {{2, 0.3}, {0, 0.7}}}, {{{2, 1.0}}}, {}};
  Mdp mdp = m.build();
  std::vector<int> act{1, 0, -1};
  MarkovChain c = induce_model_chain(mdp, act);
  CHECK(c.probability(0, 2) == doctest::Approx(0.3));
  CHECK(c.probability(0, 0) == doctest::Approx(0.7));
  CHECK(c.probability(0, 1) == 0.0);
  CHECK(c.probability(2, 2) == 1.0);
  act[0] = 5;
  CHECK_THROWS_AS(induce_model_chain(mdp, act), std::invalid_argument);
}

TEST_CASE("matrix test: exact agreement, impossible steps and the likelihood ratio") {
  // deterministic cycle 0 -> 1 -> 2 -> 0
  MarkovChain cycle(std::vector<SuccessorList>{{{1, 1.0}}, {{2, 1.0}}, {{0, 1.0}}});
  std::vector<int> tr{0, 1, 2, 0, 1, 2, 0};
  TestReport r = matrix_test(tr, cycle);
  CHECK(r.statistic == 0.0);
  CHECK_FALSE(r.reject);
  CHECK(r.observed_pairs == 3);
  std::vector<int> bad{0, 1, 0};
  r = matrix_test(bad, cycle);
  CHECK(std::isinf(r.statistic));
  CHECK(r.reject);

  // Lambda against a direct sum over steps of log(MLE) - log(model)
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = spread_chain(rng);
    auto q = spread_chain(rng);
    auto trace = sample_trace(q, 40, rng);
    std::map<std::pair<int, int>, int> pair_n;
    std::map<int, int> from_n;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
      ++pair_n[{trace[i], trace[i + 1]}];
      ++from_n[trace[i]];
    }
    double lambda = 0;
    bool impossible = false;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
      double model = p[static_cast<std::size_t>(trace[i])][static_cast<std::size_t>(trace[i + 1])];
      if (model == 0) impossible = true;
      else lambda += 2 * (std::log(static_cast<double>(pair_n[{trace[i], trace[i + 1]}]) / from_n[trace[i]]) - std::log(model));
    }
    r = matrix_test(trace, to_markov(p));
    if (impossible) {
      CHECK(std::isinf(r.statistic));
    } else {
      CHECK(r.statistic == doctest::Approx(lambda).epsilon(1e-9));
      CHECK(r.statistic >= 0.0);
    }
    CHECK(r.observed_pairs == static_cast<int>(pair_n.size()));
    std::map<int, int> successors;
    for (const auto& [pair, n] : pair_n) ++successors[pair.first];
    int dof = 0;
    for (const auto& [from, d] : successors) dof += std::max(1, d - 1);
    CHECK(r.dof == std::max(1, dof));
    CHECK(r.reject == (r.statistic > r.threshold));
  }
}

TEST_CASE("matrix test: calibrated under the model and more powerful with longer traces") {
  Rng rng(77);
  auto p = spread_chain(rng);
  MarkovChain model = to_markov(p);
  int rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) rejected += matrix_test(sample_trace(p, 500, rng), model).reject;
  INFO("rejections " << rejected);
  CHECK(rejected >= 20);
  CHECK(rejected <= 80);

  // same support, reweighted rows
  auto q = p;
  for (auto& row : q) {
    double t = 0;
    for (double& x : row) t += (x = x > 0 ? std::sqrt(x) : 0.0);
    for (double& x : row) x /= t;
  }
  int prev = -1;
  for (int len : {50, 200, 800}) {
    int rej = 0;
    for (int trial = 0; trial < 300; ++trial) rej += matrix_test(sample_trace(q, len, rng), model).reject;
    CHECK(rej >= prev);
    prev = rej;
  }
  CHECK(prev > 150);
}

TEST_CASE("policy test: hand cases") {
  PolicyTest follow;
  for (int i = 0; i < 10; ++i) follow.push(0, 1, 1.0);
  CHECK(follow.report().statistic == 0.0);
  CHECK_FALSE(follow.report().reject);

  PolicyTest other;
  for (int i = 0; i < 3; ++i) other.push(0, 0, 0.0);
  CHECK(other.report().reject);
  CHECK(other.report().statistic == doctest::Approx(-2.0 * 3 * std::log(1e-12)));

  PolicyTest split;
  for (int i = 0; i < 10; ++i) split.push(7, i < 8 ? 0 : 1, 0.5);
  const double expected = -2.0 * std::log(std::pow(0.5, 10) / (std::pow(0.8, 8) * std::pow(0.2, 2)));
  CHECK(split.report().statistic == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(3.85).epsilon(0.01));
  CHECK(split.report().observed_pairs == 2);
  CHECK(split.report().dof == 1);
}

TEST_CASE("policy test: calibrated under the prediction and more powerful with longer traces") {
  Rng rng(11);
  Policy predicted = random_policy(rng, 5);
  int rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) rejected += run_policy_test(predicted, predicted, 300, rng).reject;
  INFO("rejections " << rejected);
  CHECK(rejected >= 20);
  CHECK(rejected <= 80);

  Policy drifted = predicted;
  for (auto& row : drifted) {
    row[0] += 0.15;
    double t = row[0] + row[1] + row[2];
    for (double& x : row) x /= t;
  }
  int prev = -1;
  for (int len : {50, 200, 800}) {
    int rej = 0;
    for (int trial = 0; trial < 300; ++trial) rej += run_policy_test(predicted, drifted, len, rng).reject;
    CHECK(rej >= prev);
    prev = rej;
  }
  CHECK(prev > 200);
}

TEST_CASE("monitor: silent while P2 follows the prediction, rejects a deviation at once") {
  using namespace toy;
  ConcurrentGame g = two_cells();
  scltl::Dfa task = scltl::compile("F goal", g.atoms());
  HypothesisSpace space(g, two_cell_hypotheses());
  HyperOptions opt;
  opt.detector.window = 1;
  HyperMdp h = HyperMdp::build(g, task, space, opt);
  CHECK(default_test(space) == TestKind::kMatrix);

  MismatchMonitor follow(h, 0.05, TestKind::kMatrix);
  follow.begin(0);
  // stay (P2 allows), go and miss (P2 allowed), go while blocked, stay while blocked
  for (Observation y : {Observation{0, kStay, kAllow, 0}, Observation{0, kGo, kAllow, 0}, Observation{0, kGo, kBlock, 0},
                        Observation{0, kStay, kBlock, 0}})
    CHECK_FALSE(follow.observe(y));
  CHECK(follow.matrix().statistic == doctest::Approx(2.0 * std::log(2.0)));  // the miss had model probability 0.5
  CHECK(follow.policy().statistic == 0.0);

  MismatchMonitor deviate(h, 0.05, TestKind::kMatrix);
  deviate.begin(0);
  CHECK(deviate.observe({0, kGo, kBlock, 0}));  // P2 was predicted to allow
  CHECK(deviate.matrix().step == 1);
  CHECK(std::isinf(deviate.matrix().statistic));
  CHECK(deviate.policy().reject);
}
