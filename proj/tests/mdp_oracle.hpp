#pragma once

// Independent oracles for small MDPs and matrix games: exhaustive
// deterministic-policy enumeration with dense linear solves, and grid search
// over mixed strategies.

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "dhg/solvers.hpp"

namespace oracle {

// States without choices that are not targets are losing sinks.
struct SmallMdp {
  int n = 0;
  std::vector<char> target;
  // choices[s][c] = list of (next, prob)
  std::vector<std::vector<dhg::SuccessorList>> choices;

  bool is_target(int s) const { return target[static_cast<std::size_t>(s)] != 0; }
  bool is_sink(int s) const { return !is_target(s) && choices[static_cast<std::size_t>(s)].empty(); }

  dhg::Mdp build() const {
    dhg::Mdp::Builder b;
    for (int s = 0; s < n; ++s) {
      b.add_state();
      if (is_target(s)) {
        b.set_target(s);
        continue;
      }
      if (is_sink(s)) {
        b.set_dead(s);
        continue;
      }
      for (std::size_t c = 0; c < choices[static_cast<std::size_t>(s)].size(); ++c)
        b.add_choice(static_cast<int>(c), choices[static_cast<std::size_t>(s)][c]);
    }
    return b.finish();
  }
};

inline SmallMdp random_mdp(std::mt19937_64& rng, int max_states = 6, int max_actions = 3) {
  std::uniform_int_distribution<int> ns(2, max_states);
  SmallMdp m;
  m.n = ns(rng);
  m.target.assign(static_cast<std::size_t>(m.n), 0);
  m.target[static_cast<std::size_t>(m.n - 1)] = 1;
  const int dead = (m.n >= 3 && rng() % 2) ? m.n - 2 : -1;
  m.choices.resize(static_cast<std::size_t>(m.n));
  std::uniform_int_distribution<int> na(1, max_actions);
  std::uniform_int_distribution<int> pick(0, m.n - 1);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int s = 0; s < m.n; ++s) {
    if (s == m.n - 1 || s == dead) continue;
    int k = na(rng);
    for (int c = 0; c < k; ++c) {
      int support = 1 + static_cast<int>(rng() % 3);
      dhg::SuccessorList row;
      double total = 0.0;
      for (int i = 0; i < support; ++i) {
        double w = u(rng);
        row.emplace_back(pick(rng), w);
        total += w;
      }
      for (auto& e : row) e.second /= total;
      m.choices[static_cast<std::size_t>(s)].push_back(row);
    }
  }
  return m;
}

// Reach probability of every state under one deterministic policy.
inline std::vector<double> policy_value(const SmallMdp& m, const std::vector<int>& pol) {
  const int n = m.n;
  // states that can reach the target under pol
  std::vector<char> reach = m.target;
  for (bool grew = true; grew;) {
    grew = false;
    for (int s = 0; s < n; ++s) {
      if (reach[static_cast<std::size_t>(s)] || m.is_sink(s)) continue;
      for (auto [t, p] : m.choices[static_cast<std::size_t>(s)][static_cast<std::size_t>(pol[static_cast<std::size_t>(s)])])
        if (p > 0 && reach[static_cast<std::size_t>(t)]) {
          reach[static_cast<std::size_t>(s)] = 1;
          grew = true;
          break;
        }
    }
  }
  std::vector<int> idx;
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s)
    if (reach[static_cast<std::size_t>(s)] && !m.is_target(s)) {
      pos[static_cast<std::size_t>(s)] = static_cast<int>(idx.size());
      idx.push_back(s);
    }
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s)
    if (m.is_target(s)) v[static_cast<std::size_t>(s)] = 1.0;
  if (idx.empty()) return v;
  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    int s = idx[static_cast<std::size_t>(i)];
    for (auto [t, p] : m.choices[static_cast<std::size_t>(s)][static_cast<std::size_t>(pol[static_cast<std::size_t>(s)])]) {
      if (m.is_target(t)) b(i) += p;
      else if (pos[static_cast<std::size_t>(t)] >= 0) a(i, pos[static_cast<std::size_t>(t)]) -= p;
    }
  }
  Eigen::VectorXd x = a.fullPivLu().solve(b);
  for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = x(i);
  return v;
}

// Pointwise maximum over all deterministic policies.
inline std::vector<double> optimal_values(const SmallMdp& m) {
  std::vector<int> pol(static_cast<std::size_t>(m.n), 0);
  std::vector<double> best(static_cast<std::size_t>(m.n), 0.0);
  while (true) {
    auto v = policy_value(m, pol);
    for (int s = 0; s < m.n; ++s) best[static_cast<std::size_t>(s)] = std::max(best[static_cast<std::size_t>(s)], v[static_cast<std::size_t>(s)]);
    int s = 0;
    for (; s < m.n; ++s) {
      auto k = static_cast<int>(m.choices[static_cast<std::size_t>(s)].size());
      if (k == 0 || m.is_target(s)) continue;
      if (++pol[static_cast<std::size_t>(s)] < k) break;
      pol[static_cast<std::size_t>(s)] = 0;
    }
    if (s == m.n) break;
  }
  return best;
}

// max over the row player's mixed strategies on a 0.01 grid of the worst column payoff.
inline double grid_value(const std::vector<double>& a, int rows, int cols) {
  const int steps = 100;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> w(static_cast<std::size_t>(rows), 0);
  // enumerate compositions of `steps` into `rows` parts
  auto visit = [&](auto&& self, int i, int left) -> void {
    if (i == rows - 1) {
      w[static_cast<std::size_t>(i)] = left;
      double worst = std::numeric_limits<double>::infinity();
      for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int r = 0; r < rows; ++r) s += w[static_cast<std::size_t>(r)] * a[static_cast<std::size_t>(r * cols + j)];
        worst = std::min(worst, s / steps);
      }
      best = std::max(best, worst);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      w[static_cast<std::size_t>(i)] = x;
      self(self, i + 1, left - x);
    }
  };
  visit(visit, 0, steps);
  return best;
}

}  // namespace oracle
