#include <algorithm>
#include <cmath>
#include <limits>

#include "dhg/kernels.hpp"
#include "dhg/solvers.hpp"

namespace dhg {

namespace {

double leader_value(const ProductGame& pg, int p, const std::vector<double>& v, int* leader) {
  const ConcurrentGame& g = pg.game();
  int s = pg.game_state(p);
  double best = std::numeric_limits<double>::infinity();
  for (int a2 : g.p2_actions(s)) {
    double worst = 0.0;
    for (int a1 : g.p1_actions(s)) worst = std::max(worst, pg.expect(p, a1, a2, v));
    if (worst < best) {
      best = worst;
      if (leader) *leader = a2;
    }
  }
  return best;
}

}  // namespace

StackelbergResult stackelberg_response(const ProductGame& pg, const ViOptions& options) {
  const int n = pg.num_states();
  const ConcurrentGame& g = pg.game();
  const auto& k = kernels::active();
  StackelbergResult res;
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  for (int p = 0; p < n; ++p)
    if (pg.accepting(p)) v[static_cast<std::size_t>(p)] = 1.0;
  std::vector<double> nv = v;
  bool converged = false;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (int p = 0; p < n; ++p)
      if (!pg.terminal(p)) nv[static_cast<std::size_t>(p)] = leader_value(pg, p, v, nullptr);
    double delta = k.max_abs_diff(nv.data(), v.data(), v.size());
    v.swap(nv);
    res.sweeps = sweep;
    if (options.on_sweep) options.on_sweep(sweep, v);
    if (delta < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("stackelberg iteration did not converge in " + std::to_string(options.max_sweeps) + " sweeps");

  // Leader: smallest id among actions within tolerance of the minimum.
  res.p2.assign(static_cast<std::size_t>(n), -1);
  for (int p = 0; p < n; ++p) {
    int s = pg.game_state(p);
    if (pg.terminal(p)) {
      res.p2[static_cast<std::size_t>(p)] = g.p2_actions(s).front();
      continue;
    }
    double best = leader_value(pg, p, v, nullptr);
    for (int a2 : g.p2_actions(s)) {
      double worst = 0.0;
      for (int a1 : g.p1_actions(s)) worst = std::max(worst, pg.expect(p, a1, a2, v));
      if (worst <= best + options.tolerance) {
        res.p2[static_cast<std::size_t>(p)] = a2;
        break;
      }
    }
  }

  // Follower: optimal reachability in the MDP induced by the leader's choice.
  Mdp::Builder b;
  for (int p = 0; p < n; ++p) {
    b.add_state();
    if (pg.accepting(p)) {
      b.set_target(p);
      continue;
    }
    if (pg.terminal(p)) {
      b.set_dead(p);
      continue;
    }
    int s = pg.game_state(p);
    for (int a1 : g.p1_actions(s)) b.add_choice(a1, pg.successors(p, a1, res.p2[static_cast<std::size_t>(p)]));
  }
  Mdp mdp = b.finish();
  MdpSolution sol = mdp_reachability_vi(mdp, options);
  res.value = std::move(sol.value);
  res.p1 = std::move(sol.policy);
  for (int p = 0; p < n; ++p)
    if (res.p1[static_cast<std::size_t>(p)] < 0) res.p1[static_cast<std::size_t>(p)] = g.p1_actions(pg.game_state(p)).front();
  return res;
}

Profile StackelbergResult::profile(const ProductGame& pg) const {
  const ConcurrentGame& g = pg.game();
  Profile out(g.num_states(), g.num_p1_actions(), g.num_p2_actions());
  for (int s = 0; s < g.num_states(); ++s) {
    int p = pg.start(s);
    out.set_pure(1, s, p1[static_cast<std::size_t>(p)]);
    out.set_pure(2, s, p2[static_cast<std::size_t>(p)]);
  }
  return out;
}

}  // namespace dhg
