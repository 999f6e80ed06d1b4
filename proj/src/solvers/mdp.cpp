#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "dhg/kernels.hpp"
#include "dhg/solvers.hpp"

namespace dhg {

int Mdp::Builder::add_state() {
  kind_.push_back(0);
  state_off_.push_back(state_off_.back());
  return static_cast<int>(kind_.size()) - 1;
}

void Mdp::Builder::add_choice(int action, const SuccessorList& successors) {
  if (kind_.empty()) throw std::logic_error("mdp builder: add a state first");
  double total = 0.0;
  for (auto [t, p] : successors) {
    if (p < 0.0) throw std::invalid_argument("mdp builder: negative probability");
    total += p;
    if (p == 0.0) continue;
    next_.push_back(t);
    prob_.push_back(p);
  }
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("mdp builder: choice probabilities sum to " + std::to_string(total));
  action_.push_back(action);
  choice_off_.push_back(next_.size());
  ++state_off_.back();
}

void Mdp::Builder::mark(int s, char k) {
  if (s < 0 || static_cast<std::size_t>(s) >= kind_.size()) throw std::out_of_range("mdp builder: bad state");
  kind_[static_cast<std::size_t>(s)] = k;
}

Mdp Mdp::Builder::finish() {
  for (std::int32_t t : next_)
    if (t < 0 || static_cast<std::size_t>(t) >= kind_.size()) throw std::invalid_argument("mdp builder: successor out of range");
  Mdp m;
  m.state_off_ = std::move(state_off_);
  m.action_ = std::move(action_);
  m.choice_off_ = std::move(choice_off_);
  m.next_ = std::move(next_);
  m.prob_ = std::move(prob_);
  m.kind_ = std::move(kind_);
  *this = Builder();
  return m;
}

namespace {

double choice_value(const Mdp& mdp, int c, const std::vector<double>& v, const kernels::Table& k) {
  SuccessorRow r = mdp.successors(c);
  return k.gather_dot(r.prob.data(), r.next.data(), v.data(), r.size());
}

// States from which some target is reachable in the transition graph.
std::vector<char> can_reach_target(const Mdp& mdp) {
  const int n = mdp.num_states();
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    if (mdp.absorbing(s)) continue;
    for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c)
      for (std::int32_t t : mdp.successors(c).next) pred[static_cast<std::size_t>(t)].push_back(s);
  }
  std::vector<char> ok(static_cast<std::size_t>(n), 0);
  std::deque<int> work;
  for (int s = 0; s < n; ++s)
    if (mdp.target(s)) {
      ok[static_cast<std::size_t>(s)] = 1;
      work.push_back(s);
    }
  while (!work.empty()) {
    int t = work.front();
    work.pop_front();
    for (int p : pred[static_cast<std::size_t>(t)])
      if (!ok[static_cast<std::size_t>(p)]) {
        ok[static_cast<std::size_t>(p)] = 1;
        work.push_back(p);
      }
  }
  return ok;
}

// Among choices whose value is within `slack` of the best, pick the one with
// the least expected time to a target, measured on the chain conditioned on
// reaching it (successor weights p(t) v(t)). Plain rank-based tie breaks let
// the policy idle in loops it only leaves through rare outcomes.
std::vector<int> fastest_optimal_choices(const Mdp& mdp, const std::vector<double>& v, double slack) {
  const int n = mdp.num_states();
  const auto& k = kernels::active();
  std::vector<int> choice(static_cast<std::size_t>(n), -1);
  struct Cand {
    int c;
    double norm;  // sum_t p(t) v(t)
  };
  std::vector<std::vector<Cand>> cands(static_cast<std::size_t>(n));
  std::vector<int> live;
  for (int s = 0; s < n; ++s) {
    if (mdp.absorbing(s)) continue;
    choice[static_cast<std::size_t>(s)] = mdp.choice_begin(s);
    if (v[static_cast<std::size_t>(s)] <= 1e-12) continue;
    double best = -1.0;
    for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) best = std::max(best, choice_value(mdp, c, v, k));
    for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
      double q = choice_value(mdp, c, v, k);
      if (q >= best - slack && q > 0.0) cands[static_cast<std::size_t>(s)].push_back({c, q});
    }
    live.push_back(s);
  }
  // Capped: where the only optimal behaviour is waiting for rare outcomes the
  // step estimates grow for tens of thousands of sweeps, yet the argmin has
  // long settled. Policy iteration afterwards makes the value exact anyway.
  std::vector<double> steps(static_cast<std::size_t>(n), 0.0);
  for (int sweep = 0; sweep < 2000; ++sweep) {
    double change = 0.0;
    for (int s : live) {
      double best = std::numeric_limits<double>::infinity();
      int arg = choice[static_cast<std::size_t>(s)];
      for (const Cand& cd : cands[static_cast<std::size_t>(s)]) {
        SuccessorRow r = mdp.successors(cd.c);
        double e = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
          auto t = static_cast<std::size_t>(r.next[i]);
          e += r.prob[i] * v[t] * steps[t];
        }
        e = 1.0 + e / cd.norm;
        if (e < best - 1e-12) {
          best = e;
          arg = cd.c;
        }
      }
      double& cur = steps[static_cast<std::size_t>(s)];
      change = std::max(change, std::fabs(best - cur) / std::max(1.0, best));
      cur = best;
      choice[static_cast<std::size_t>(s)] = arg;
    }
    if (change < 1e-9) break;
  }
  return choice;
}

}  // namespace

std::vector<double> evaluate_policy(const Mdp& mdp, std::span<const int> choice) {
  const int n = mdp.num_states();
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  // states that reach a target with positive probability under the policy
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    if (mdp.absorbing(s)) continue;
    for (std::int32_t t : mdp.successors(choice[static_cast<std::size_t>(s)]).next) pred[static_cast<std::size_t>(t)].push_back(s);
  }
  std::vector<char> reach(static_cast<std::size_t>(n), 0);
  std::deque<int> work;
  for (int s = 0; s < n; ++s)
    if (mdp.target(s)) {
      v[static_cast<std::size_t>(s)] = 1.0;
      reach[static_cast<std::size_t>(s)] = 1;
      work.push_back(s);
    }
  while (!work.empty()) {
    int t = work.front();
    work.pop_front();
    for (int p : pred[static_cast<std::size_t>(t)])
      if (!reach[static_cast<std::size_t>(p)]) {
        reach[static_cast<std::size_t>(p)] = 1;
        work.push_back(p);
      }
  }
  // (I - P) x = b on the transient states that can reach a target; the rest stay 0
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  std::vector<int> idx;
  for (int s = 0; s < n; ++s)
    if (reach[static_cast<std::size_t>(s)] && !mdp.target(s)) {
      pos[static_cast<std::size_t>(s)] = static_cast<int>(idx.size());
      idx.push_back(s);
    }
  if (idx.empty()) return v;
  const auto m = static_cast<Eigen::Index>(idx.size());
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    int s = idx[static_cast<std::size_t>(i)];
    entries.emplace_back(i, i, 1.0);
    SuccessorRow r = mdp.successors(choice[static_cast<std::size_t>(s)]);
    for (std::size_t k = 0; k < r.size(); ++k) {
      int t = r.next[k];
      if (mdp.target(t)) b(i) += r.prob[k];
      else if (pos[static_cast<std::size_t>(t)] >= 0) entries.emplace_back(i, pos[static_cast<std::size_t>(t)], -r.prob[k]);
    }
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw std::runtime_error("policy evaluation: singular system");
  Eigen::VectorXd x = lu.solve(b);
  for (Eigen::Index i = 0; i < m; ++i)
    v[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = std::clamp(x(i), 0.0, 1.0);
  return v;
}

MdpSolution mdp_reachability_vi(const Mdp& mdp, const ViOptions& options) {
  const int n = mdp.num_states();
  const auto& k = kernels::active();
  MdpSolution sol;
  std::vector<char> live = can_reach_target(mdp);
  std::vector<int> active;
  for (int s = 0; s < n; ++s)
    if (!mdp.absorbing(s) && live[static_cast<std::size_t>(s)]) active.push_back(s);

  std::vector<double> v(static_cast<std::size_t>(n), 0.0), nv;
  for (int s = 0; s < n; ++s)
    if (mdp.target(s)) v[static_cast<std::size_t>(s)] = 1.0;
  nv = v;
  bool converged = false;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (int s : active) {
      double best = 0.0;
      for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) best = std::max(best, choice_value(mdp, c, v, k));
      nv[static_cast<std::size_t>(s)] = best;
    }
    double delta = k.max_abs_diff(nv.data(), v.data(), v.size());
    v.swap(nv);
    sol.sweeps = sweep;
    if (options.on_sweep) options.on_sweep(sweep, v);
    if (delta < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("mdp value iteration did not converge in " + std::to_string(options.max_sweeps) + " sweeps");

  // Fastest value-optimal policy from the VI estimate, then policy iteration with strict
  // improvements only (which cannot create target-avoiding loops).
  std::vector<int> choice = fastest_optimal_choices(mdp, v, std::max(10.0 * options.tolerance, 1e-9));
  std::vector<double> pv = evaluate_policy(mdp, choice);
  for (int round = 0; round < 1000; ++round) {
    bool changed = false;
    for (int s : active) {
      int cur = choice[static_cast<std::size_t>(s)];
      double base = choice_value(mdp, cur, pv, k);
      int best_c = cur;
      double best = base;
      for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
        double q = choice_value(mdp, c, pv, k);
        if (q > best + 1e-10) {
          best = q;
          best_c = c;
        }
      }
      if (best_c != cur) {
        choice[static_cast<std::size_t>(s)] = best_c;
        changed = true;
      }
    }
    if (!changed) break;
    ++sol.improvement_rounds;
    pv = evaluate_policy(mdp, choice);
  }

  sol.value = std::move(pv);
  sol.policy.assign(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s)
    if (!mdp.absorbing(s)) sol.policy[static_cast<std::size_t>(s)] = mdp.action(choice[static_cast<std::size_t>(s)]);
  return sol;
}

BoundedPolicy bounded_reachability(const Mdp& mdp, int horizon) {
  if (horizon < 1) throw std::invalid_argument("bounded reachability needs a positive horizon");
  const int n = mdp.num_states();
  const auto& k = kernels::active();
  BoundedPolicy out;
  out.horizon = horizon;
  out.num_states = n;
  out.action.assign(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(n), -1);
  std::vector<double> v(static_cast<std::size_t>(n), 0.0), nv;
  for (int s = 0; s < n; ++s)
    if (mdp.target(s)) v[static_cast<std::size_t>(s)] = 1.0;
  nv = v;
  for (int left = 1; left <= horizon; ++left) {
    std::int16_t* row = out.action.data() + static_cast<std::size_t>(left - 1) * static_cast<std::size_t>(n);
    for (int s = 0; s < n; ++s) {
      if (mdp.absorbing(s)) continue;
      double best = -1.0;
      int arg = mdp.choice_begin(s);
      for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
        double q = choice_value(mdp, c, v, k);
        if (q > best + 1e-15) {
          best = q;
          arg = c;
        }
      }
      nv[static_cast<std::size_t>(s)] = best;
      row[s] = static_cast<std::int16_t>(mdp.action(arg));
    }
    v.swap(nv);
  }
  out.value = std::move(v);
  return out;
}

}  // namespace dhg
