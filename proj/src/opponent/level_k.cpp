#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dhg/opponent.hpp"

namespace dhg {

SoftResponse soft_response(const SubgoalGame& sg, int player, const Profile& other, const SoftViOptions& opt) {
  if (player != 1 && player != 2) throw std::invalid_argument("soft_response: player must be 1 or 2");
  if (!(opt.temperature > 0.0)) throw std::invalid_argument("soft_response: temperature must be positive");
  const ConcurrentGame& g = sg.game();
  const int n = g.num_states();
  const int na = player == 1 ? g.num_p1_actions() : g.num_p2_actions();
  const double tau = opt.temperature;
  const double sign = player == 1 ? 1.0 : -1.0;  // P2 minimizes
  const auto entries_next = g.entry_next();
  const auto entries_prob = g.entry_prob();

  SoftResponse out;
  out.value.assign(static_cast<std::size_t>(n), 0.0);
  out.policy.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(na), 0.0);
  std::vector<double> v = out.value, nv = v, q(static_cast<std::size_t>(na));

  // Q(s, a) for the responding player against the other's strategy.
  auto fill_q = [&](int s, std::span<const int> mine, const std::vector<double>& val) {
    std::span<const int> theirs = player == 1 ? g.p2_actions(s) : g.p1_actions(s);
    auto sigma = player == 1 ? other.p2(s) : other.p1(s);
    for (int a : mine) {
      double e = 0.0;
      for (int b : theirs) {
        double w = sigma[static_cast<std::size_t>(b)];
        if (w <= 0.0) continue;
        int a1 = player == 1 ? a : b, a2 = player == 1 ? b : a;
        double row = sg.payoff(s, a1, a2);
        auto [lo, hi] = g.entry_range(s, a1, a2);
        for (std::size_t k = lo; k < hi; ++k) {
          int t = entries_next[k];
          if (!sg.absorbing(t)) row += opt.discount * entries_prob[k] * val[static_cast<std::size_t>(t)];
        }
        e += w * row;
      }
      q[static_cast<std::size_t>(a)] = e;
    }
  };
  // sign * tau * log mean exp(sign * Q / tau)
  auto soft = [&](std::span<const int> mine) {
    double m = -std::numeric_limits<double>::infinity();
    for (int a : mine) m = std::max(m, sign * q[static_cast<std::size_t>(a)] / tau);
    double z = 0.0;
    for (int a : mine) z += std::exp(sign * q[static_cast<std::size_t>(a)] / tau - m);
    return sign * tau * (m + std::log(z / static_cast<double>(mine.size())));
  };

  bool converged = false;
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < n; ++s) {
      if (sg.absorbing(s)) continue;
      auto mine = player == 1 ? g.p1_actions(s) : g.p2_actions(s);
      fill_q(s, mine, v);
      nv[static_cast<std::size_t>(s)] = soft(mine);
      delta = std::max(delta, std::abs(nv[static_cast<std::size_t>(s)] - v[static_cast<std::size_t>(s)]));
    }
    v.swap(nv);
    out.sweeps = sweep;
    if (delta < opt.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("soft value iteration did not converge in " + std::to_string(opt.max_sweeps) + " sweeps");

  for (int s = 0; s < n; ++s) {
    auto mine = player == 1 ? g.p1_actions(s) : g.p2_actions(s);
    double* row = out.policy.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(na);
    if (sg.absorbing(s)) {
      for (int a : mine) row[a] = 1.0 / static_cast<double>(mine.size());
      continue;
    }
    fill_q(s, mine, v);
    double m = -std::numeric_limits<double>::infinity();
    for (int a : mine) m = std::max(m, sign * q[static_cast<std::size_t>(a)] / tau);
    double z = 0.0;
    for (int a : mine) z += (row[a] = std::exp(sign * q[static_cast<std::size_t>(a)] / tau - m));
    for (int a : mine) row[a] /= z;
  }
  out.value = std::move(v);
  return out;
}

LevelStack build_level_stack(const SubgoalGame& sg, int max_level, const SoftViOptions& opt, const Profile* nominal) {
  if (max_level < 0) throw std::invalid_argument("build_level_stack: negative level cap");
  const ConcurrentGame& g = sg.game();
  LevelStack st;
  st.level.push_back(nominal ? *nominal : Profile::uniform(g));
  st.level.front().validate(g);
  const auto n1 = static_cast<std::size_t>(g.num_p1_actions()), n2 = static_cast<std::size_t>(g.num_p2_actions());
  for (int k = 1; k <= max_level; ++k) {
    const Profile& prev = st.level.back();
    SoftResponse r1 = soft_response(sg, 1, prev, opt);
    SoftResponse r2 = soft_response(sg, 2, prev, opt);
    Profile p(g.num_states(), g.num_p1_actions(), g.num_p2_actions());
    for (int s = 0; s < g.num_states(); ++s) {
      std::copy_n(r1.policy.begin() + static_cast<long>(static_cast<std::size_t>(s) * n1), n1, p.p1(s).begin());
      std::copy_n(r2.policy.begin() + static_cast<long>(static_cast<std::size_t>(s) * n2), n2, p.p2(s).begin());
    }
    st.level.push_back(std::move(p));
  }
  return st;
}

double trajectory_log_likelihood(const ConcurrentGame& g, const History& h, const Profile& pol, double floor) {
  double ll = 0.0;
  for (std::size_t t = 0; t < h.actions.size(); ++t) {
    int s = h.states[t], a1 = h.actions[t].p1, a2 = h.actions[t].p2;
    ll += std::log(std::max(g.probability(s, a1, a2, h.states[t + 1]), floor));
    ll += std::log(std::max(pol.p2(s)[static_cast<std::size_t>(a2)], floor));
  }
  return ll;
}

double trajectory_likelihood(const ConcurrentGame& g, const History& h, const Profile& pol, double floor) {
  return std::exp(trajectory_log_likelihood(g, h, pol, floor));
}

std::vector<double> level_scores(std::span<const double> r, double tau) {
  if (r.empty()) throw std::invalid_argument("level_scores: empty score vector");
  if (!(tau > 0.0)) throw std::invalid_argument("level_scores: temperature must be positive");
  double m = *std::max_element(r.begin(), r.end());
  std::vector<double> sigma(r.size());
  double z = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) z += (sigma[k] = std::exp((r[k] - m) / tau));
  for (double& x : sigma) x /= z;
  return sigma;
}

double poisson_pmf(int k, double lambda) {
  if (k < 0 || lambda < 0.0) throw std::invalid_argument("poisson_pmf: k and lambda must be non-negative");
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
}

double PoissonEstimate::update(std::span<const double> sigma) {
  if (static_cast<int>(sigma.size()) != max_level_ + 1) throw std::invalid_argument("PoissonEstimate: score vector size");
  double expected = 0.0;
  for (std::size_t k = 0; k < sigma.size(); ++k) expected += static_cast<double>(k) * sigma[k];
  const double i = iterations_;
  lambda_ = i / (i + 1.0) * lambda_ + expected / (i + 1.0);
  ++iterations_;
  return lambda_;
}

std::vector<double> score_levels(const ConcurrentGame& g, const History& h, const LevelStack& stack, double tau,
                                 LevelScoring scoring) {
  std::vector<double> r;
  for (const Profile& p : stack.level)
    r.push_back(scoring == LevelScoring::kRaw ? trajectory_likelihood(g, h, p) : trajectory_log_likelihood(g, h, p));
  return level_scores(r, tau);
}

}  // namespace dhg
