#include <cmath>

#include "doctest.h"
#include "dhg/mcts.hpp"
#include "mcts_toys.hpp"

using namespace dhg;
using namespace dhg::mcts;

namespace {

// Root with two visited action children.
Tree two_children(double q0, long n0, double q1, long n1) {
  Tree t;
  t.add_root(0, {0, 1}, false);
  int a = t.add_action(0, 0), b = t.add_action(0, 1);
  t[a].visits = n0;
  t[a].total = q0 * static_cast<double>(n0);
  t[b].visits = n1;
  t[b].total = q1 * static_cast<double>(n1);
  t[0].visits = n0 + n1;
  return t;
}

}  // namespace

TEST_CASE("best child: UCB1 with lowest-id ties") {
  Tree t = two_children(0.5, 10, 0.4, 2);
  t[0].visits = 20;
  const double c = 1.0 / std::sqrt(2.0);
  CHECK(t[t.best_child(0, c)].action == 1);
  double second = 0.4 + c * std::sqrt(2.0 * std::log(20.0) / 2.0), first = 0.5 + c * std::sqrt(2.0 * std::log(20.0) / 10.0);
  CHECK(second == doctest::Approx(1.627).epsilon(2e-3));
  CHECK(first == doctest::Approx(1.048).epsilon(1e-3));
  CHECK(t[t.best_child(0, 0.0)].action == 0);  // pure exploitation

  Tree eq = two_children(0.3, 10, 0.3, 1);
  CHECK(eq[eq.best_child(0, 0.5)].action == 1);
  CHECK(eq[eq.best_child(0, 0.0)].action == 0);

  Tree unvisited = two_children(0.3, 10, 0.3, 0);
  CHECK_THROWS_AS(unvisited.best_child(0, 0.5), std::logic_error);
}

TEST_CASE("backup: counts and totals along the root path") {
  Tree t;
  t.add_root(1, {0, 1}, false);
  int a = t.add_action(0, 1);
  int w = t.add_outcome(a, 7, {0}, false);
  t.backup(w, 1.0);
  CHECK(t[0].visits == 1);
  CHECK(t[a].visits == 1);
  CHECK(t[w].visits == 1);
  for (int i = 0; i < 4; ++i) t.backup(w, 1.0);
  CHECK(t[0].total == 5.0);
  CHECK(t.find_outcome(a, 7) == w);
  CHECK(t.find_outcome(a, 8) == -1);
  CHECK(t.inconsistent_node() == -1);

  // random interleaved growth keeps N >= sum of children
  Rng rng(4);
  Tree r;
  r.add_root(0, {0, 1, 2}, false);
  std::vector<int> decisions{0};
  for (int step = 0; step < 500; ++step) {
    int v = decisions[static_cast<std::size_t>(rng() % decisions.size())];
    int an = r.add_action(v, static_cast<int>(rng() % 3));
    int leaf = r.add_outcome(an, rng(), {0, 1}, false);
    decisions.push_back(leaf);
    r.backup(leaf, uniform01(rng));
    for (int n = 0; n < r.size(); ++n) {
      long sum = 0;
      for (int ch : r[n].children) sum += r[ch].visits;
      REQUIRE(r[n].visits >= sum);
    }
  }
}

TEST_CASE("search: trivial cases and errors") {
  toy::RandomMdp m = toy::RandomMdp::single_action();
  Options opt;
  opt.budget = 1;
  Rng rng(1);
  CHECK(search(m, 0, opt, rng).action == 0);
  opt.budget = 0;
  CHECK_THROWS_AS(search(m, 0, opt, rng), std::invalid_argument);
}

TEST_CASE("search: consistent tree, bounded means, seed determinism") {
  Rng gen(8);
  toy::RandomMdp m = toy::RandomMdp::make(gen, 0.05);
  Options opt;
  opt.budget = 3000;
  opt.depth = 20;
  for (long budget : {1L, 2L, 17L, 3000L}) {
    opt.budget = budget;
    Rng rng(99);
    SearchResult r = search(m, 0, opt, rng);
    CHECK(r.tree.inconsistent_node() == -1);
    CHECK(r.tree[0].visits == budget);
    for (int v = 0; v < r.tree.size(); ++v) {
      CHECK(r.tree[v].mean() >= 0.0);
      CHECK(r.tree[v].mean() <= 1.0);
      CHECK(r.tree[v].depth <= opt.depth);
    }
  }
  Rng a(5), b(5);
  SearchResult ra = search(m, 0, opt, a), rb = search(m, 0, opt, b);
  CHECK(ra.action == rb.action);
  REQUIRE(ra.tree.size() == rb.tree.size());
  for (int v = 0; v < ra.tree.size(); ++v) {
    CHECK(ra.tree[v].visits == rb.tree[v].visits);
    CHECK(ra.tree[v].total == rb.tree[v].total);
    CHECK(ra.tree[v].key == rb.tree[v].key);
  }
}

TEST_CASE("search: root means approach discounted values on a deterministic chain") {
  // 0 -> 1 -> goal, or straight to the trap; value of the first move is 0.8
  toy::RandomMdp chain = toy::RandomMdp::chain();
  Options opt;
  opt.budget = 2000;
  Rng rng(3);
  SearchResult r = search(chain, 0, opt, rng);
  CHECK(r.action == 0);
  int best = -1;
  for (int ch : r.tree[0].children)
    if (r.tree[ch].action == 0) best = ch;
  REQUIRE(best >= 0);
  CHECK(r.tree[best].mean() > 0.75);
  CHECK(r.tree[best].mean() <= 0.8 + 1e-12);
}

TEST_CASE("search: picks the value-iteration optimum on random toys") {
  Rng gen(2024);
  Options opt;
  opt.budget = 20000;
  int agree = 0, total = 0;
  for (int inst = 0; inst < 4; ++inst) {
    toy::RandomMdp m = toy::RandomMdp::make(gen, 0.05);
    const int best = m.optimal_root_action(opt.discount);
    for (int seed = 0; seed < 10; ++seed) {
      Rng rng(static_cast<std::uint64_t>(1000 * inst + seed));
      SearchResult r = search(m, 0, opt, rng);
      agree += r.action == best;
      ++total;
      CHECK(r.tree.inconsistent_node() == -1);
    }
  }
  INFO("agree " << agree << "/" << total);
  CHECK(agree >= total * 95 / 100);
}
