#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "dhg/harness.hpp"
#include "dhg/hypergame.hpp"
#include "dhg/scltl.hpp"
#include "dhg/worlds.hpp"

using namespace dhg;

namespace {

const char* kTask = "(!obs U A) & (!(B | obs) U C)";

ExperimentSpec small_trap(const std::string& world, Protocol protocol, int episodes) {
  ExperimentSpec s;
  s.name = "t";
  s.protocol = protocol;
  s.world = world;
  s.formula = kTask;
  s.hypotheses = {"!obs U A", "!obs U B", "!obs U C"};
  s.initial_hypothesis = 1;
  s.detector.window = 2;
  s.detector.threshold = 0.3;
  s.episodes = episodes;
  s.seed = 99;
  return s;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

}  // namespace

TEST_CASE("spec parsing: defaults, overrides and rejected input") {
  ExperimentSpec s = parse_experiment(R"({"formula": "F A", "hypotheses": ["F A"], "episodes": 5,
      "inference": {"window": 3, "threshold": 0.5}, "planner": {"kind": "mcts", "budget": 10, "c": 2.0},
      "detector": {"alpha": 0.1, "test": "policy"}})");
  CHECK(s.protocol == Protocol::kDeceptive);
  CHECK(s.episodes == 5);
  CHECK(s.detector.window == 3);
  CHECK(s.detector.threshold == 0.5);
  CHECK(s.planner == Planner::kMcts);
  CHECK(s.mcts.budget == 10);
  CHECK(s.mcts.exploration == 2.0);
  CHECK(s.mcts.depth == 50);
  CHECK(s.alpha == 0.1);
  REQUIRE(s.test);
  CHECK(*s.test == TestKind::kPolicy);

  CHECK_THROWS_AS(parse_experiment(R"({"formula": "F A", "hypotheses": ["F A"], "episode": 5})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment(R"({"formula": "F A", "hypotheses": ["F A"], "episodes": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment(R"({"formula": "F A"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment(R"({"formula": "F A", "hypotheses": ["F A"], "expect": {"min_gap": 0.3}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment(R"({"formula": "F A", "hypotheses": ["F A"], "planner": {"kind": "pomcp"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(load_experiment("/nonexistent/spec.json"), std::invalid_argument);
}

TEST_CASE("bundled presets load and cover every protocol") {
  std::set<Protocol> seen;
  std::vector<std::string> names = preset_names();
  CHECK(names.size() >= 11);
  for (const std::string& n : names) {
    INFO(n);
    ExperimentSpec s = load_experiment(preset_path(n));
    CHECK(s.name == n);
    CHECK(s.episodes >= 1);
    if (!s.expect.versus.empty()) CHECK(std::find(names.begin(), names.end(), s.expect.versus) != names.end());
    seen.insert(s.protocol);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("episode seeds are deterministic and distinct") {
  std::set<std::uint64_t> seeds;
  for (long i = 0; i < 10000; ++i) seeds.insert(episode_seed(7, i));
  CHECK(seeds.size() == 10000);
  CHECK(episode_seed(7, 3) == episode_seed(7, 3));
  CHECK(episode_seed(7, 3) != episode_seed(8, 3));
}

TEST_CASE("result rows: binomial standard error and csv") {
  Rng rng(3);
  ResultTable t;
  for (int k = 0; k < 50; ++k) {
    ResultRow r;
    r.label = "r" + std::to_string(k);
    r.episodes = 1 + static_cast<long>(rng() % 500);
    r.satisfied = static_cast<long>(rng() % static_cast<std::uint64_t>(r.episodes + 1));
    double p = static_cast<double>(r.satisfied) / static_cast<double>(r.episodes);
    CHECK(r.rate() >= 0.0);
    CHECK(r.rate() <= 1.0);
    CHECK(r.standard_error() == doctest::Approx(std::sqrt(p * (1 - p) / static_cast<double>(r.episodes))).epsilon(1e-12));
    t.add(r);
  }
  auto rows = csv_rows(t.csv());
  REQUIRE(rows.size() == 50);
  for (const auto& cells : rows) CHECK(cells.size() >= 9);
  CHECK(t.find("r7") != nullptr);
  CHECK(t.find("zz") == nullptr);
}

TEST_CASE("fixed seed reproduces trajectories byte for byte, whatever the thread count") {
  ExperimentSpec s = small_trap("world1", Protocol::kDeceptive, 1);
  RunOptions o;
  o.record_trajectories = true;
  ExperimentResult a = run_experiment(s, o), b = run_experiment(s, o);
  REQUIRE(a.trajectories.size() == 1);
  CHECK(a.trajectories == b.trajectories);
  CHECK(a.table.csv() == b.table.csv());

  s.episodes = 12;
  o.threads = 1;
  ExperimentResult serial = run_experiment(s, o);
  o.threads = 3;
  ExperimentResult parallel = run_experiment(s, o);
  CHECK(serial.trajectories == parallel.trajectories);
  CHECK(serial.table.csv() == parallel.table.csv());

  // every record is a valid episode of the world
  GridWorld w(load_world(world_path("world1")));
  for (const std::string& line : serial.trajectories) {
    auto j = nlohmann::json::parse(line);
    auto states = j["states"].get<std::vector<int>>();
    CHECK(states.size() == j["p1"].size() + 1);
    CHECK(states.front() == w.game().initial());
  }
  const ResultRow& row = serial.table.rows().front();
  CHECK(row.satisfied + row.failed + row.timeouts + row.stops == row.episodes);
}

TEST_CASE("delay sweep at k = 0 equals the base run") {
  ExperimentSpec base = small_trap("world2", Protocol::kDeceptive, 40);
  ExperimentSpec sweep = base;
  sweep.protocol = Protocol::kDelaySweep;
  sweep.delays = {0};
  ExperimentResult a = run_experiment(base), b = run_experiment(sweep);
  const ResultRow &ra = a.table.rows().front(), &rb = b.table.rows().front();
  CHECK(rb.label == "k=0");
  CHECK(ra.satisfied == rb.satisfied);
  CHECK(ra.mean_length == rb.mean_length);
  CHECK(ra.value == rb.value);
}

TEST_CASE("deviation from the first step is caught at the first inconsistent step") {
  ExperimentSpec s = small_trap("world2", Protocol::kMismatch, 30);
  s.deviation_step = 0;
  s.test = TestKind::kMatrix;
  RunOptions o;
  o.record_trajectories = true;
  ExperimentResult r = run_experiment(s, o);
  REQUIRE(r.trajectories.size() == 30);

  // independent replay of P2's nominal play to find where the observed action departs from it
  GridWorld w(load_world(world_path("world2")));
  const ConcurrentGame& g = w.game();
  std::vector<Hypothesis> hs;
  for (const std::string& f : s.hypotheses) {
    scltl::Dfa d = scltl::compile(f, g.atoms());
    ProductGame px(g, d);
    hs.push_back({f, f, stackelberg_response(px).profile(px)});
  }
  HypothesisSpace space(g, hs, s.initial_hypothesis);

  // last timeline row per episode
  std::map<long, std::vector<std::string>> last;
  for (auto& cells : csv_rows(r.timeline)) last[std::stol(cells[0])] = cells;

  int exact = 0;
  for (const std::string& line : r.trajectories) {
    auto j = nlohmann::json::parse(line);
    long ep = j["episode"].get<long>();
    auto states = j["states"].get<std::vector<int>>();
    auto a2 = j["p2"].get<std::vector<int>>();
    BsrActor nominal(space, s.detector);
    nominal.begin(states.front());
    Rng unused(0);
    long first = -1;
    auto a1 = j["p1"].get<std::vector<int>>();
    for (std::size_t t = 0; t < a2.size(); ++t) {
      if (nominal.act(states[t], unused) != a2[t]) {
        first = static_cast<long>(t) + 1;
        break;
      }
      nominal.observe({states[t], a1[t], a2[t], states[t + 1]});
    }
    REQUIRE(last.count(ep));
    const auto& row = last[ep];
    long step = std::stol(row[1]);
    bool reject = row[6] == "1";
    if (first < 0) continue;
    INFO("episode " << ep << " first inconsistent " << first << " stop " << step);
    CHECK(reject);
    CHECK(step <= first);
    if (row[3] == "inf") {
      CHECK(step == first);
      ++exact;
    }
  }
  CHECK(exact > 0);
}

TEST_CASE("lambda protocol: within-tolerance count matches the replication rows") {
  ExperimentSpec s;
  s.name = "lam";
  s.protocol = Protocol::kLambda;
  s.world = "pursuit";
  s.lambda.levels = 2;
  s.lambda.trajectories = 15;
  s.lambda.replications = 3;
  s.lambda.scoring = LevelScoring::kLog;
  s.expect.lambda_tolerance = 0.5;
  ExperimentResult r = run_experiment(s);
  long within = 0;
  for (const ResultRow& row : r.table.rows()) {
    if (row.label.rfind("rep", 0) != 0) continue;
    CHECK(row.value >= 0.0);
    CHECK(row.value <= 2.0);
    within += std::abs(row.value - s.lambda.truth) <= 0.5;
  }
  const ResultRow* w = r.table.find("within_tolerance");
  REQUIRE(w);
  CHECK(w->episodes == 3);
  CHECK(w->satisfied == within);
  CHECK(csv_rows(r.timeline).size() == 45);
}

TEST_CASE("stage failures carry the stage name") {
  ExperimentSpec s = small_trap("world1", Protocol::kDeceptive, 1);
  s.hypotheses = {"!obs U nosuchatom"};
  s.initial_hypothesis = 0;
  try {
    run_experiment(s);
    FAIL("expected a failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).rfind("hypotheses:", 0) == 0);
  }
  s = small_trap("world1", Protocol::kDeceptive, 1);
  s.world = "nosuchworld";
  CHECK_THROWS_WITH_AS(run_experiment(s), doctest::Contains("world:"), std::runtime_error);
}
