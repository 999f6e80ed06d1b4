#include <algorithm>
#include <cmath>
#include <deque>

#include "dhg/kernels.hpp"
#include "dhg/solvers.hpp"

namespace dhg {

namespace {

// Product states from which acceptance is reachable under some joint action.
std::vector<char> live_states(const ProductGame& pg) {
  const int n = pg.num_states();
  const ConcurrentGame& g = pg.game();
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    if (pg.terminal(p)) continue;
    int s = pg.game_state(p);
    for (int a1 : g.p1_actions(s))
      for (int a2 : g.p2_actions(s))
        for (auto [t, pr] : pg.successors(p, a1, a2)) pred[static_cast<std::size_t>(t)].push_back(p);
  }
  for (auto& v : pred) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  std::vector<char> live(static_cast<std::size_t>(n), 0);
  std::deque<int> work;
  for (int p = 0; p < n; ++p)
    if (pg.accepting(p)) {
      live[static_cast<std::size_t>(p)] = 1;
      work.push_back(p);
    }
  while (!work.empty()) {
    int t = work.front();
    work.pop_front();
    for (int p : pred[static_cast<std::size_t>(t)])
      if (!live[static_cast<std::size_t>(p)]) {
        live[static_cast<std::size_t>(p)] = 1;
        work.push_back(p);
      }
  }
  return live;
}

void fill_matrix(const ProductGame& pg, int p, const std::vector<double>& v, std::vector<double>& m) {
  const ConcurrentGame& g = pg.game();
  int s = pg.game_state(p);
  auto r = g.p1_actions(s);
  auto c = g.p2_actions(s);
  m.resize(r.size() * c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) m[i * c.size() + j] = pg.expect(p, r[i], c[j], v);
}

std::vector<double> uniform_over(std::span<const int> acts, int n) {
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  for (int a : acts) d[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(acts.size());
  return d;
}

std::vector<double> scatter(std::span<const int> acts, const std::vector<double>& local, int n) {
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < acts.size(); ++i) d[static_cast<std::size_t>(acts[i])] = local[i];
  return d;
}

}  // namespace

ShapleyResult shapley_vi(const ProductGame& pg, const ViOptions& options) {
  const int n = pg.num_states();
  const ConcurrentGame& g = pg.game();
  const auto& k = kernels::active();
  ShapleyResult res;
  res.value.assign(static_cast<std::size_t>(n), 0.0);
  res.p1.resize(static_cast<std::size_t>(n));
  res.p2.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p)
    if (pg.accepting(p)) res.value[static_cast<std::size_t>(p)] = 1.0;

  std::vector<char> live = live_states(pg);
  std::vector<int> active;
  for (int p = 0; p < n; ++p)
    if (!pg.terminal(p) && live[static_cast<std::size_t>(p)]) active.push_back(p);

  // P1 keeps the strategy from the last sweep in which its value rose. Those
  // strategies make progress toward acceptance; locally optimal ones computed
  // from the fixed point alone may stall forever in zero-risk waiting states.
  std::vector<double> v = res.value, nv = v, m;
  bool converged = false;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (int p : active) {
      fill_matrix(pg, p, v, m);
      int s = pg.game_state(p);
      auto r = g.p1_actions(s);
      auto c = g.p2_actions(s);
      double val;
      bool improved;
      SaddlePoint sp = find_saddle(m, static_cast<int>(r.size()), static_cast<int>(c.size()));
      if (sp.found) {
        val = sp.value;
        improved = val > v[static_cast<std::size_t>(p)] + 1e-9;
        if (improved) {
          res.p1[static_cast<std::size_t>(p)].assign(static_cast<std::size_t>(g.num_p1_actions()), 0.0);
          res.p1[static_cast<std::size_t>(p)][static_cast<std::size_t>(r[static_cast<std::size_t>(sp.row)])] = 1.0;
        }
      } else {
        MatrixGameSolution sol = solve_matrix_game(m, static_cast<int>(r.size()), static_cast<int>(c.size()));
        val = sol.value;
        if (val > v[static_cast<std::size_t>(p)] + 1e-9) res.p1[static_cast<std::size_t>(p)] = scatter(r, sol.row, g.num_p1_actions());
      }
      nv[static_cast<std::size_t>(p)] = val;
    }
    double delta = k.max_abs_diff(nv.data(), v.data(), v.size());
    v = nv;
    res.sweeps = sweep;
    if (options.on_sweep) options.on_sweep(sweep, v);
    if (delta < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("shapley iteration did not converge in " + std::to_string(options.max_sweeps) + " sweeps");
  res.value = v;

  for (int p = 0; p < n; ++p) {
    int s = pg.game_state(p);
    auto r = g.p1_actions(s);
    auto c = g.p2_actions(s);
    if (pg.terminal(p) || !live[static_cast<std::size_t>(p)]) {
      if (res.p1[static_cast<std::size_t>(p)].empty()) res.p1[static_cast<std::size_t>(p)] = uniform_over(r, g.num_p1_actions());
      res.p2[static_cast<std::size_t>(p)] = uniform_over(c, g.num_p2_actions());
      continue;
    }
    fill_matrix(pg, p, v, m);
    MatrixGameSolution sol = solve_matrix_game(m, static_cast<int>(r.size()), static_cast<int>(c.size()));
    res.p2[static_cast<std::size_t>(p)] = scatter(c, sol.col, g.num_p2_actions());
    if (res.p1[static_cast<std::size_t>(p)].empty()) res.p1[static_cast<std::size_t>(p)] = scatter(r, sol.row, g.num_p1_actions());
  }
  return res;
}

}  // namespace dhg
