#include <cmath>
#include <map>

#include "chain_oracle.hpp"
#include "doctest.h"
#include "dhg/hypergame.hpp"
#include "dhg/worlds.hpp"
#include "mdp_oracle.hpp"
#include "toy_worlds.hpp"

using namespace dhg;
using namespace toy;

namespace {

// The hyper MDP as a plain choice list, for the enumeration oracle.
oracle::SmallMdp as_small(const Mdp& mdp) {
  oracle::SmallMdp m;
  m.n = mdp.num_states();
  m.target.assign(static_cast<std::size_t>(m.n), 0);
  m.choices.resize(static_cast<std::size_t>(m.n));
  for (int s = 0; s < m.n; ++s) {
    if (mdp.target(s)) {
      m.target[static_cast<std::size_t>(s)] = 1;
      continue;
    }
    for (int c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
      SuccessorRow r = mdp.successors(c);
      SuccessorList row;
      for (std::size_t k = 0; k < r.size(); ++k) row.emplace_back(r.next[k], r.prob[k]);
      m.choices[static_cast<std::size_t>(s)].push_back(row);
    }
  }
  return m;
}

// Four states, two atoms with random labels, 2x2 actions.
ConcurrentGame labelled_game(Rng& rng) {
  const int n = 4;
  std::vector<SuccessorList> rows(static_cast<std::size_t>(n * 4));
  for (auto& row : rows) {
    double a = 0.2 + 0.6 * uniform01(rng);
    row = {{static_cast<int>(rng() % n), a}, {static_cast<int>(rng() % n), 1.0 - a}};
  }
  std::vector<Symbol> labels(static_cast<std::size_t>(n));
  for (int s = 1; s < n; ++s) labels[static_cast<std::size_t>(s)] = static_cast<Symbol>(rng() % 4);
  ConcurrentGame::Shape shape{n, 2, 2, 0, {"a", "b"}};
  return ConcurrentGame::build(
      shape, [](int, int) { return true; }, [](int, int) { return true; },
      [&](int s, int a1, int a2, SuccessorList& out) {
        for (auto e : rows[static_cast<std::size_t>(s * 4 + a1 * 2 + a2)]) out.push_back(e);
      },
      [labels](int s) { return labels[static_cast<std::size_t>(s)]; });
}

const char* kTasks[] = {"F a", "!b U a", "F (a & X b)", "F a & F b", "(!a U b) | F (a & b)"};

struct World1 {
  GridWorld world{load_world(world_path("world1"))};
  scltl::Dfa task = scltl::compile("(!obs U A) & (!(B | obs) U C)", world.game().atoms());
  std::vector<scltl::Dfa> dfas;
  std::unique_ptr<HypothesisSpace> space;
  HyperOptions options;

  World1() {
    const auto& g = world.game();
    std::vector<Hypothesis> hs;
    for (const char* x : {"!obs U A", "!obs U B", "!obs U C"}) dfas.push_back(scltl::compile(x, g.atoms()));
    for (std::size_t i = 0; i < dfas.size(); ++i) {
      ProductGame px(g, dfas[i]);
      hs.push_back({"x" + std::to_string(i), "", stackelberg_response(px).profile(px)});
    }
    space = std::make_unique<HypothesisSpace>(g, hs, 1);
    options.detector.window = 2;
    options.detector.threshold = 0.3;
  }
};

}  // namespace

TEST_CASE("single hypothesis: hyper MDP reduces to the product MDP") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    ConcurrentGame g = labelled_game(rng);
    scltl::Dfa task = scltl::compile(kTasks[trial % 5], g.atoms());
    Profile prof = oracle::random_profile(g, rng);
    HypothesisSpace space(g, {{"only", "", prof}});
    HyperOptions opt;
    opt.detector.window = 1;
    HyperMdp h = HyperMdp::build(g, task, space, opt);

    ProductGame pg(g, task);
    oracle::SmallMdp prod;
    prod.n = pg.num_states();
    prod.target.assign(static_cast<std::size_t>(prod.n), 0);
    prod.choices.resize(static_cast<std::size_t>(prod.n));
    for (int p = 0; p < prod.n; ++p) {
      if (pg.accepting(p)) {
        prod.target[static_cast<std::size_t>(p)] = 1;
        continue;
      }
      if (pg.terminal(p)) continue;
      int s = pg.game_state(p);
      for (int a1 : g.p1_actions(s)) {
        std::map<int, double> row;
        for (int a2 : g.p2_actions(s))
          for (auto [t, pr] : pg.successors(p, a1, a2)) row[t] += prof.p2(s)[static_cast<std::size_t>(a2)] * pr;
        prod.choices[static_cast<std::size_t>(p)].emplace_back(row.begin(), row.end());
      }
    }
    auto expected = oracle::optimal_values(prod);
    MdpSolution sol = mdp_reachability_vi(h.mdp());
    CHECK(sol.value[0] == doctest::Approx(expected[static_cast<std::size_t>(pg.initial())]).epsilon(1e-6));
    // every hyper state carries the product value of its (s, q)
    for (int id = 0; id < h.num_states(); ++id) {
      const HyperState& v = h.state(id);
      CHECK(v.x == 0);
      CHECK(sol.value[static_cast<std::size_t>(id)] ==
            doctest::Approx(expected[static_cast<std::size_t>(pg.index(v.s, v.q))]).epsilon(1e-6));
    }
  }
}

TEST_CASE("two-cell toy: hand-enumerated hyper MDP") {
  ConcurrentGame g = two_cells();
  scltl::Dfa task = scltl::compile("F goal", g.atoms());
  HypothesisSpace space(g, two_cell_hypotheses());
  HyperOptions opt;
  opt.detector.window = 1;
  opt.detector.threshold = 0.3;
  HyperMdp h = HyperMdp::build(g, task, space, opt);

  const int q0 = task.initial();
  const int acc = task.next(q0, 1u);
  const int idle = 0, goal = 1;
  auto cls = [&](int a1, int a2, int to) {
    std::vector<Observation> w{{0, a1, a2, to}};
    return h.classes().find(w).value_or(-1);
  };
  auto id = [&](HyperState v) {
    auto found = h.find(v);
    REQUIRE(found);
    return *found;
  };
  // A go is evidence for "goal" (ratio 9) and a stay for "idle", each enough
  // to cross 0.3 on its own in a one-observation window.
  const int start = id({0, WindowClasses::empty(), q0, idle});
  const int won = id({1, cls(kGo, kAllow, 1), acc, goal});
  const int missed = id({0, cls(kGo, kAllow, 0), q0, goal});
  const int waited = id({0, cls(kStay, kAllow, 0), q0, idle});
  const int blocked = id({0, cls(kGo, kBlock, 0), q0, goal});
  const int calmed = id({0, cls(kStay, kBlock, 0), q0, idle});
  CHECK(h.num_states() == 6);
  CHECK(start == HyperMdp::initial());

  const Mdp& m = h.mdp();
  CHECK(m.target(won));
  auto row = [&](int v, int a1) {
    std::map<int, double> out;
    for (int c = m.choice_begin(v); c < m.choice_end(v); ++c) {
      if (m.action(c) != a1) continue;
      SuccessorRow r = m.successors(c);
      for (std::size_t k = 0; k < r.size(); ++k) out[r.next[k]] += r.prob[k];
    }
    return out;
  };
  using Row = std::map<int, double>;
  for (int v : {start, waited, calmed}) {
    CHECK(row(v, kGo) == Row{{won, 0.5}, {missed, 0.5}});
    CHECK(row(v, kStay) == Row{{waited, 1.0}});
  }
  for (int v : {missed, blocked}) {
    CHECK(row(v, kGo) == Row{{blocked, 1.0}});
    CHECK(row(v, kStay) == Row{{calmed, 1.0}});
  }

  // Attempts happen every other step at best: V_H = 1 - 0.5^ceil(H/2).
  DeceptivePolicy pol = synthesize(h, {}, 7);
  CHECK(pol.initial_value() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pol.bounded_initial_value() == doctest::Approx(1.0 - std::pow(0.5, 4)));
  CHECK(pol.bounded->act(7, missed) == kStay);
  CHECK(pol.bounded->act(7, start) == kGo);

  auto enumerated = oracle::optimal_values(as_small(m));
  for (int v = 0; v < h.num_states(); ++v)
    CHECK(pol.solution.value[static_cast<std::size_t>(v)] == doctest::Approx(enumerated[static_cast<std::size_t>(v)]).epsilon(1e-6));
}

TEST_CASE("random small hypergames: enumeration, absorption and dominance over the security value") {
  Rng rng(2024);
  int instances = 0, enumerated = 0;
  while (instances < 20) {
    ConcurrentGame g = labelled_game(rng);
    scltl::Dfa task = scltl::compile(kTasks[instances % 5], g.atoms());
    std::vector<Hypothesis> hs;
    for (int i = 0; i < 2; ++i) hs.push_back({"h" + std::to_string(i), "", oracle::random_profile(g, rng)});
    HypothesisSpace space(g, hs);
    HyperOptions opt;
    opt.detector.window = 1 + instances % 2;
    HyperMdp h = HyperMdp::build(g, task, space, opt);
    ++instances;

    const Mdp& m = h.mdp();
    for (int v = 0; v < m.num_states(); ++v) {
      const int q = h.state(v).q;
      if (task.accepting(q)) CHECK(m.target(v));
      if (task.terminal(q)) CHECK(m.absorbing(v));
      double total = 0.0;
      for (int c = m.choice_begin(v); c < m.choice_end(v); ++c) {
        SuccessorRow r = m.successors(c);
        double t = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) t += r.prob[k];
        CHECK(t == doctest::Approx(1.0).epsilon(1e-9));
        total += t;
      }
      if (m.absorbing(v)) CHECK(total == 0.0);
    }

    DeceptivePolicy pol = synthesize(h);
    ProductGame pg(g, task);
    ShapleyResult sh = shapley_vi(pg);
    CHECK(pol.initial_value() >= sh.value[static_cast<std::size_t>(pg.initial())] - 1e-6);

    if (h.num_states() <= 14) {
      ++enumerated;
      auto best = oracle::optimal_values(as_small(m));
      CHECK(pol.initial_value() == doctest::Approx(best[0]).epsilon(1e-6));
    }
  }
  CHECK(enumerated >= 3);
}

TEST_CASE("world1: augmented states agree with the detector and the tracked state") {
  World1 w;
  const auto& g = w.world.game();
  HyperMdp h = HyperMdp::build(g, w.task, *w.space, w.options);
  // absorption scan on the full model
  const Mdp& m = h.mdp();
  int targets = 0;
  for (int v = 0; v < m.num_states(); ++v) {
    if (w.task.terminal(h.state(v).q)) CHECK(m.absorbing(v));
    targets += m.target(v);
  }
  CHECK(targets > 0);

  DeceptivePolicy pol = synthesize(h, {}, 200);
  Rng rng(9);
  for (int e = 0; e < 20; ++e) {
    DeceptiveActor p1(h, pol);
    BsrActor p2(*w.space, w.options.detector);
    Episode ep = simulate(g, w.task, p1, p2, rng);
    auto aug = augment(h, ep.history);
    auto obs = observations_of(ep.history);
    REQUIRE(aug.size() == obs.size() + 1);
    for (std::size_t k = 0; k <= obs.size(); ++k)
      CHECK(aug[k].x == eta(*w.space, w.space->initial(), std::span(obs).first(k), w.options.detector));
    CHECK(aug.back() == p1.tracked());
    CHECK(aug.back().x == p2.hypothesis());
    CHECK(p1.off_model_steps() == 0);
  }

  // histories sharing the last window of observations share the class component
  std::map<std::vector<Observation>, int> seen;
  for (int e = 0; e < 30; ++e) {
    DeceptiveActor p1(h, pol);
    BsrActor p2(*w.space, w.options.detector);
    Episode ep = simulate(g, w.task, p1, p2, rng);
    auto aug = augment(h, ep.history);
    auto obs = observations_of(ep.history);
    for (std::size_t k = 2; k <= obs.size(); ++k) {
      std::vector<Observation> key(obs.begin() + static_cast<long>(k) - 2, obs.begin() + static_cast<long>(k));
      auto [it, fresh] = seen.emplace(key, aug[k].cls);
      if (!fresh) CHECK(it->second == aug[k].cls);
    }
  }
}

TEST_CASE("world1: Monte Carlo success matches the bounded value") {
  World1 w;
  const auto& g = w.world.game();
  HyperMdp h = HyperMdp::build(g, w.task, *w.space, w.options);
  const int horizon = 200;
  DeceptivePolicy pol = synthesize(h, {}, horizon);
  CHECK(pol.initial_value() >= pol.bounded_initial_value());
  const int n = 2000;
  int wins = 0;
  Rng rng(123);
  SimulationOptions so;
  so.horizon = horizon;
  for (int e = 0; e < n; ++e) {
    DeceptiveActor p1(h, pol);
    BsrActor p2(*w.space, w.options.detector);
    wins += simulate(g, w.task, p1, p2, rng, so).outcome == Outcome::kSatisfied;
  }
  const double v = pol.bounded_initial_value();
  const double rate = static_cast<double>(wins) / n;
  const double se = std::sqrt(v * (1 - v) / n);
  INFO("rate " << rate << " value " << v);
  CHECK(std::abs(rate - v) <= 3 * se);
}

TEST_CASE("zero horizon times out unless the start already satisfies the task") {
  ConcurrentGame g = two_cells();
  HypothesisSpace space(g, two_cell_hypotheses());
  HyperOptions opt;
  opt.detector.window = 1;
  scltl::Dfa task = scltl::compile("F goal", g.atoms());
  HyperMdp h = HyperMdp::build(g, task, space, opt);
  DeceptivePolicy pol = synthesize(h);
  DeceptiveActor p1(h, pol);
  BsrActor p2(space, opt.detector);
  Rng rng(1);
  SimulationOptions so;
  so.horizon = 0;
  CHECK(simulate(g, task, p1, p2, rng, so).outcome == Outcome::kTimeout);

  scltl::Dfa trivial = scltl::compile("true", g.atoms());
  HyperMdp ht = HyperMdp::build(g, trivial, space, opt);
  DeceptivePolicy pt = synthesize(ht);
  CHECK(pt.initial_value() == 1.0);
  DeceptiveActor p1t(ht, pt);
  CHECK(simulate(g, trivial, p1t, p2, rng, so).outcome == Outcome::kSatisfied);
}

TEST_CASE("hyper MDP builder refuses bad inputs") {
  ConcurrentGame g = two_cells();
  HypothesisSpace space(g, two_cell_hypotheses());
  scltl::Dfa other = scltl::compile("F x", {"x", "y"});
  CHECK_THROWS_AS(HyperMdp::build(g, other, space), std::invalid_argument);
  HyperOptions opt;
  opt.detector.window = 1;
  opt.max_states = 3;
  scltl::Dfa task = scltl::compile("F goal", g.atoms());
  CHECK_THROWS_AS(HyperMdp::build(g, task, space, opt), StateCapExceeded);
  opt.max_states = 100;
  opt.detector.tie = TieRule::kUniform;
  CHECK_THROWS_AS(HyperMdp::build(g, task, space, opt), std::invalid_argument);
}
