#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dhg/game.hpp"

namespace dhg {

// Memoryless mixed strategies for both players, one distribution per game state.
class Profile {
 public:
  Profile() = default;
  Profile(int num_states, int num_p1_actions, int num_p2_actions)
      : n_(num_states),
        n1_(num_p1_actions),
        n2_(num_p2_actions),
        p1_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_p1_actions), 0.0),
        p2_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_p2_actions), 0.0) {}

  // Uniform over the available actions of each state.
  static Profile uniform(const ConcurrentGame& g) {
    Profile p(g.num_states(), g.num_p1_actions(), g.num_p2_actions());
    for (int s = 0; s < g.num_states(); ++s) {
      for (int a : g.p1_actions(s)) p.p1(s)[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(g.p1_actions(s).size());
      for (int a : g.p2_actions(s)) p.p2(s)[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(g.p2_actions(s).size());
    }
    return p;
  }

  int num_states() const { return n_; }
  int num_p1_actions() const { return n1_; }
  int num_p2_actions() const { return n2_; }

  std::span<double> p1(int s) { return {p1_.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n1_), static_cast<std::size_t>(n1_)}; }
  std::span<double> p2(int s) { return {p2_.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n2_), static_cast<std::size_t>(n2_)}; }
  std::span<const double> p1(int s) const { return {p1_.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n1_), static_cast<std::size_t>(n1_)}; }
  std::span<const double> p2(int s) const { return {p2_.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n2_), static_cast<std::size_t>(n2_)}; }

  // Replaces row s of `player` (1 or 2) with a point mass on `a`.
  void set_pure(int player, int s, int a) {
    auto row = player == 1 ? p1(s) : p2(s);
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(a)] = 1.0;
  }

  // Every row is a distribution supported on available actions.
  void validate(const ConcurrentGame& g, double tol = 1e-9) const {
    if (n_ != g.num_states() || n1_ != g.num_p1_actions() || n2_ != g.num_p2_actions())
      throw std::invalid_argument("profile: shape does not match game");
    for (int s = 0; s < n_; ++s) {
      double t1 = 0, t2 = 0;
      for (int a = 0; a < n1_; ++a) {
        double p = p1(s)[static_cast<std::size_t>(a)];
        if (p < -tol || (p > tol && !g.p1_available(s, a))) throw std::invalid_argument("profile: bad P1 row");
        t1 += p;
      }
      for (int a = 0; a < n2_; ++a) {
        double p = p2(s)[static_cast<std::size_t>(a)];
        if (p < -tol || (p > tol && !g.p2_available(s, a))) throw std::invalid_argument("profile: bad P2 row");
        t2 += p;
      }
      if (std::abs(t1 - 1.0) > 1e-6 || std::abs(t2 - 1.0) > 1e-6) throw std::invalid_argument("profile: row does not sum to 1");
    }
  }

 private:
  int n_ = 0, n1_ = 0, n2_ = 0;
  std::vector<double> p1_, p2_;
};

}  // namespace dhg
