#include "dhg/detect.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dhg {

double chi2_quantile(double p, int dof) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p must lie in (0, 1)");
  if (dof < 1) throw std::domain_error("chi2_quantile: dof must be positive");
  const double k = 0.5 * dof;
  auto cdf = [k](double x) { return boost::math::gamma_p(k, 0.5 * x); };
  double lo = 0.0, hi = std::max(1.0, static_cast<double>(dof));
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-11; ++it) {
    double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

const char* test_name(TestKind k) { return k == TestKind::kMatrix ? "matrix" : "policy"; }

namespace {

double nlogn(long n) { return n > 0 ? static_cast<double>(n) * std::log(static_cast<double>(n)) : 0.0; }

// Adds one to a count and returns the change of n log n.
double bump(std::unordered_map<std::uint64_t, long>& counts, std::uint64_t key) {
  long& n = counts[key];
  double before = nlogn(n);
  ++n;
  return nlogn(n) - before;
}

std::uint64_t pair_key(std::uint64_t a, std::uint64_t b) { return splitmix64(a * 0x9e3779b97f4a7c15ULL ^ splitmix64(b)); }

void finish(TestReport& r, double statistic, std::size_t pairs, std::size_t states, int single) {
  r.statistic = statistic;
  r.observed_pairs = static_cast<int>(pairs);
  r.observed_states = static_cast<int>(states);
  // Each visited state counts max(1, distinct successors - 1). A state seen
  // with one successor still adds a term with positive expectation, and
  // without its degree of freedom sparse traces reject on the first rare step.
  int dof = std::max(1, r.observed_pairs - r.observed_states + single);
  if (dof != r.dof || r.threshold == 0.0) r.threshold = chi2_quantile(1.0 - r.alpha, dof);
  r.dof = dof;
  r.reject = r.statistic > r.threshold;
}

}  // namespace

void SuccessorSpread::operator()(std::uint64_t state, bool new_pair) {
  if (!new_pair) return;
  int d = ++distinct_[state];
  if (d == 1) ++single_;
  else if (d == 2) --single_;
}

MarkovChain::MarkovChain(std::vector<SuccessorList> rows) {
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!next_.empty() && next_.size() > off_.back() && next_.back() == row[i].first)
        prob_.back() += row[i].second;
      else {
        next_.push_back(row[i].first);
        prob_.push_back(row[i].second);
      }
    }
    off_.push_back(next_.size());
  }
}

SuccessorRow MarkovChain::row(int from) const {
  std::size_t b = off_[static_cast<std::size_t>(from)], e = off_[static_cast<std::size_t>(from) + 1];
  return {std::span<const std::int32_t>(next_).subspan(b, e - b), std::span<const double>(prob_).subspan(b, e - b)};
}

double MarkovChain::probability(int from, int to) const {
  if (from < 0 || from >= num_states()) return 0.0;
  SuccessorRow r = row(from);
  auto it = std::lower_bound(r.next.begin(), r.next.end(), to);
  if (it == r.next.end() || *it != to) return 0.0;
  return r.prob[static_cast<std::size_t>(it - r.next.begin())];
}

MarkovChain induce_model_chain(const Mdp& mdp, std::span<const int> action) {
  const int n = mdp.num_states();
  if (static_cast<int>(action.size()) != n) throw std::invalid_argument("induce_model_chain: one action per state expected");
  std::vector<SuccessorList> rows(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    auto& row = rows[static_cast<std::size_t>(v)];
    if (mdp.absorbing(v)) {
      row.emplace_back(v, 1.0);
      continue;
    }
    bool found = false;
    for (int c = mdp.choice_begin(v); c < mdp.choice_end(v) && !found; ++c) {
      if (mdp.action(c) != action[static_cast<std::size_t>(v)]) continue;
      SuccessorRow r = mdp.successors(c);
      for (std::size_t k = 0; k < r.size(); ++k) row.emplace_back(r.next[k], r.prob[k]);
      found = true;
    }
    if (!found) throw std::invalid_argument("induce_model_chain: policy action unavailable at state " + std::to_string(v));
  }
  return MarkovChain(std::move(rows));
}

const TestReport& MatrixTest::push(std::uint64_t from, std::uint64_t to, double model_prob) {
  nlogn_states_ += bump(state_n_, from);
  nlogn_pairs_ += bump(pair_n_, pair_key(from, to));
  track_(from, pair_n_[pair_key(from, to)] == 1);
  if (model_prob > 0.0) model_ll_ += std::log(model_prob);
  else impossible_ = true;
  report_.kind = TestKind::kMatrix;
  report_.alpha = alpha_;
  ++report_.step;
  double stat = impossible_ ? std::numeric_limits<double>::infinity()
                            : std::max(0.0, 2.0 * (nlogn_pairs_ - nlogn_states_ - model_ll_));
  finish(report_, stat, pair_n_.size(), state_n_.size(), track_.single());
  return report_;
}

TestReport matrix_test(std::span<const int> trace, const MarkovChain& model, double alpha) {
  if (trace.size() < 2) throw std::invalid_argument("matrix_test: need at least one transition");
  MatrixTest t(alpha);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i)
    t.push(static_cast<std::uint64_t>(trace[i]), static_cast<std::uint64_t>(trace[i + 1]), model.probability(trace[i], trace[i + 1]));
  return t.report();
}

const TestReport& PolicyTest::push(std::uint64_t state, int action, double predicted_prob) {
  nlogn_states_ += bump(state_n_, state);
  nlogn_pairs_ += bump(pair_n_, pair_key(state, static_cast<std::uint64_t>(action)));
  track_(state, pair_n_[pair_key(state, static_cast<std::uint64_t>(action))] == 1);
  model_ll_ += std::log(std::max(predicted_prob, floor_));
  report_.kind = TestKind::kPolicy;
  report_.alpha = alpha_;
  ++report_.step;
  finish(report_, std::max(0.0, 2.0 * (nlogn_pairs_ - nlogn_states_ - model_ll_)), pair_n_.size(), state_n_.size(), track_.single());
  return report_;
}

double predicted_p2(const HyperMdp& hyper, const HyperState& v, int a2) {
  return hyper.space()[v.x].profile.p2(v.s)[static_cast<std::size_t>(a2)];
}

double model_step_probability(const HyperMdp& hyper, const HyperState& v, int a1, const HyperState& w) {
  auto from = hyper.find(v);
  auto to = hyper.find(w);
  if (!from || !to) return 0.0;
  const Mdp& m = hyper.mdp();
  double p = 0.0;
  for (int c = m.choice_begin(*from); c < m.choice_end(*from); ++c) {
    if (m.action(c) != a1) continue;
    SuccessorRow r = m.successors(c);
    for (std::size_t k = 0; k < r.size(); ++k)
      if (r.next[k] == *to) p += r.prob[k];
  }
  return p;
}

std::uint64_t state_key(const HyperState& v) { return HyperStateHash{}(v); }

MismatchMonitor::MismatchMonitor(HyperMdp& hyper, double alpha, TestKind active)
    : hyper_(&hyper), kind_(active), alpha_(alpha), matrix_(alpha), policy_(alpha) {}

void MismatchMonitor::begin(int s0) {
  matrix_ = MatrixTest(alpha_);
  policy_ = PolicyTest(alpha_);
  const auto& task = hyper_->task();
  v_ = {s0, WindowClasses::empty(), task.next(task.initial(), hyper_->game().label(s0)), hyper_->space().initial()};
}

bool MismatchMonitor::observe(const Observation& y) {
  HyperState w = hyper_->advance(v_, y);
  matrix_.push(state_key(v_), state_key(w), model_step_probability(*hyper_, v_, y.a1, w));
  policy_.push(state_key(v_), y.a2, predicted_p2(*hyper_, v_, y.a2));
  v_ = w;
  return active().reject;
}

TestKind default_test(const HypothesisSpace& space) {
  const ConcurrentGame& g = space.game();
  for (int x = 0; x < space.size(); ++x)
    for (int s = 0; s < g.num_states(); ++s)
      for (double p : space[x].profile.p2(s))
        if (p > 1e-12 && p < 1.0 - 1e-12) return TestKind::kPolicy;
  return TestKind::kMatrix;
}

}  // namespace dhg
