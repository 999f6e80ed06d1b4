#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dhg/detect.hpp"
#include "dhg/harness.hpp"
#include "dhg/hypergame.hpp"
#include "dhg/pursuit.hpp"
#include "dhg/scltl.hpp"
#include "dhg/worlds.hpp"

namespace dhg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

void note(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << std::endl;
}

struct EpisodeRecord {
  Outcome outcome = Outcome::kTimeout;
  long length = 0;
  long stop_step = -1;  // detector rejection step, 1-based
  std::string trajectory;
};

std::string trajectory_json(const std::string& label, long index, std::uint64_t seed, const Episode& ep) {
  nlohmann::json j;
  j["config"] = label;
  j["episode"] = index;
  j["seed"] = seed;
  j["outcome"] = outcome_name(ep.outcome);
  j["states"] = ep.history.states;
  std::vector<int> a1, a2;
  for (const JointAction& a : ep.history.actions) {
    a1.push_back(a.p1);
    a2.push_back(a.p2);
  }
  j["p1"] = a1;
  j["p2"] = a2;
  return j.dump();
}

// Runs one(i) for every episode, across threads when allowed. Results land in
// index order, so aggregation does not depend on scheduling.
template <class F>
std::vector<EpisodeRecord> run_episodes(long n, int threads, F&& one) {
  std::vector<EpisodeRecord> out(static_cast<std::size_t>(n));
  long t = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  t = std::min(t, n);
  if (t <= 1) {
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = one(i);
    return out;
  }
  std::exception_ptr err;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (long k = 0; k < t; ++k)
      pool.emplace_back([&, k] {
        try {
          for (long i = k; i < n; i += t) out[static_cast<std::size_t>(i)] = one(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
        }
      });
  }
  if (err) std::rethrow_exception(err);
  return out;
}

ResultRow aggregate(const std::string& label, const std::vector<EpisodeRecord>& recs) {
  ResultRow r;
  r.label = label;
  r.episodes = static_cast<long>(recs.size());
  long total = 0;
  std::vector<double> stops;
  for (const EpisodeRecord& e : recs) {
    total += e.length;
    switch (e.outcome) {
      case Outcome::kSatisfied: ++r.satisfied; break;
      case Outcome::kFailed: ++r.failed; break;
      case Outcome::kTimeout: ++r.timeouts; break;
      case Outcome::kMismatchStop: ++r.stops; break;
    }
    stops.push_back(e.stop_step >= 0 ? static_cast<double>(e.stop_step) : kInf);
  }
  if (!recs.empty()) {
    r.mean_length = static_cast<double>(total) / static_cast<double>(recs.size());
    std::sort(stops.begin(), stops.end());
    std::size_t m = stops.size();
    double med = m % 2 ? stops[m / 2] : 0.5 * (stops[m / 2 - 1] + stops[m / 2]);
    if (r.stops > 0) r.median_stop = med;
  }
  return r;
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

void check_at_least(ExperimentResult& res, const std::string& name, double got, std::optional<double> bound) {
  if (bound) res.checks.push_back({name, got >= *bound, fmt(got) + " >= " + fmt(*bound)});
}
void check_at_most(ExperimentResult& res, const std::string& name, double got, std::optional<double> bound) {
  if (bound) res.checks.push_back({name, got <= *bound, fmt(got) + " <= " + fmt(*bound)});
}

// Everything one configuration needs: world, task automaton, P2's hypothesis
// space and P1's planner. Members point at each other, so it stays in place.
class Setup {
 public:
  Setup(const ExperimentSpec& spec, WorldConfig cfg, bool need_space)
      : world(stage("world", [&] { return GridWorld(std::move(cfg)); })),
        task(stage("compile", [&] { return scltl::compile(spec.formula, world.game().atoms()); })) {
    pursuit = world.config().kind == WorldKind::kPursuit;
    if (need_space) space.emplace(world.game(), stage("hypotheses", [&] { return hypotheses(spec); }), spec.initial_hypothesis);
    if (spec.pursuit_start && !pursuit) throw std::invalid_argument("start: cells only apply to pursuit worlds");
    start = spec.pursuit_start ? world.encode_pursuit(*spec.pursuit_start) : world.game().initial();
  }
  Setup(const Setup&) = delete;
  Setup& operator=(const Setup&) = delete;

  void plan(const ExperimentSpec& spec) {
    if (spec.planner == Planner::kValueIteration) {
      if (pursuit) throw std::invalid_argument("planner: value iteration needs a trap world; use mcts");
      if (spec.pursuit_start) throw std::invalid_argument("planner: value iteration starts at the world's initial state");
      hyper.emplace(stage("hypergame", [&] {
        HyperOptions ho;
        ho.detector = spec.detector;
        return HyperMdp::build(world.game(), task, *space, ho);
      }));
      policy.emplace(stage("synthesize", [&] { return synthesize(*hyper, {}, spec.horizon); }));
    } else {
      sim.emplace(world, task, *space, spec.detector, spec.guided_rollout, spec.rollout_noise);
    }
  }

  std::unique_ptr<Actor> p1(const ExperimentSpec& spec) const {
    if (policy) return std::make_unique<DeceptiveActor>(*hyper, *policy);
    return std::make_unique<MctsActor>(*sim, spec.mcts);
  }

  double symmetric_start_value() const {
    ProductGame pg(world.game(), task);
    ShapleyResult r = shapley_vi(pg);
    return r.value[static_cast<std::size_t>(pg.start(start))];
  }

  GridWorld world;
  scltl::Dfa task;
  bool pursuit = false;
  int start = 0;
  std::optional<HypothesisSpace> space;
  std::optional<HyperMdp> hyper;
  std::optional<DeceptivePolicy> policy;
  std::optional<PursuitSimulator> sim;

 private:
  std::vector<Hypothesis> hypotheses(const ExperimentSpec& spec) const {
    const ConcurrentGame& g = world.game();
    if (pursuit) {
      auto models = build_waypoint_models(world, spec.hypotheses, spec.p2_level, spec.stack);
      return level_k_hypotheses(models, spec.p2_level);
    }
    std::vector<Hypothesis> out;
    for (const std::string& f : spec.hypotheses) {
      scltl::Dfa d = scltl::compile(f, g.atoms());
      ProductGame px(g, d);
      out.push_back({f, f, stackelberg_response(px).profile(px)});
    }
    return out;
  }
};

WorldConfig world_config(const ExperimentSpec& spec) {
  return stage("world", [&] { return load_world(world_path(spec.world)); });
}

// P1 deceptive against P2's windowed best response.
ResultRow deceptive_row(const ExperimentSpec& spec, const Setup& setup, const std::string& label,
                        const RunOptions& opt, ExperimentResult& res) {
  auto recs = stage("simulate", [&] {
    return run_episodes(spec.episodes, opt.threads, [&](long i) {
      std::uint64_t seed = episode_seed(spec.seed, i);
      Rng rng(seed);
      auto p1 = setup.p1(spec);
      BsrActor p2(*setup.space, spec.detector);
      SimulationOptions so;
      so.horizon = spec.horizon;
      so.start = setup.start;
      Episode ep = simulate(setup.world.game(), setup.task, *p1, p2, rng, so);
      EpisodeRecord r;
      r.outcome = ep.outcome;
      r.length = static_cast<long>(ep.history.length());
      if (opt.record_trajectories) r.trajectory = trajectory_json(label, i, seed, ep);
      return r;
    });
  });
  for (EpisodeRecord& r : recs)
    if (!r.trajectory.empty()) res.trajectories.push_back(std::move(r.trajectory));
  ResultRow row = aggregate(label, recs);
  if (setup.policy) {
    row.value = setup.policy->initial_value();
    row.bounded_value = setup.policy->bounded_initial_value();
  }
  return row;
}

void rate_checks(const ExperimentSpec& spec, const RunOptions& opt, ExperimentResult& res, double rate) {
  check_at_least(res, "min_rate", rate, spec.expect.min_rate);
  check_at_most(res, "max_rate", rate, spec.expect.max_rate);
  if (spec.expect.min_gap) {
    const ExperimentResult* other = opt.lookup ? opt.lookup(spec.expect.versus) : nullptr;
    if (!other || other->table.rows().empty()) {
      res.checks.push_back({"min_gap", false, "no result for " + spec.expect.versus});
    } else {
      double gap = rate - other->table.rows().front().rate();
      check_at_least(res, "min_gap", gap, spec.expect.min_gap);
    }
  }
}

void run_deceptive(const ExperimentSpec& spec, const RunOptions& opt, ExperimentResult& res) {
  Setup setup(spec, world_config(spec), true);
  note(opt, "[" + spec.name + "] planning");
  setup.plan(spec);
  note(opt, "[" + spec.name + "] simulating " + std::to_string(spec.episodes) + " episodes");
  ResultRow row = deceptive_row(spec, setup, spec.name, opt, res);
  rate_checks(spec, opt, res, row.rate());
  res.table.add(std::move(row));
  if (spec.expect.max_start_value) {
    note(opt, "[" + spec.name + "] symmetric value at the start");
    ResultRow sym;
    sym.label = "symmetric_start";
    sym.value = stage("shapley", [&] { return setup.symmetric_start_value(); });
    check_at_most(res, "max_start_value", sym.value, spec.expect.max_start_value);
    res.table.add(std::move(sym));
  }
}

// Both players on their equilibrium strategies of the product game.
void run_nash(const ExperimentSpec& spec, const RunOptions& opt, ExperimentResult& res) {
  Setup setup(spec, world_config(spec), false);
  ProductGame pg(setup.world.game(), setup.task);
  ShapleyResult eq = stage("shapley", [&] { return shapley_vi(pg); });
  auto recs = stage("simulate", [&] {
    return run_episodes(spec.episodes, opt.threads, [&](long i) {
      std::uint64_t seed = episode_seed(spec.seed, i);
      Rng rng(seed);
      ProductActor p1(1, pg, eq.p1), p2(2, pg, eq.p2);
      SimulationOptions so;
      so.horizon = spec.horizon;
      so.start = setup.start;
      Episode ep = simulate(setup.world.game(), setup.task, p1, p2, rng, so);
      EpisodeRecord r;
      r.outcome = ep.outcome;
      r.length = static_cast<long>(ep.history.length());
      if (opt.record_trajectories) r.trajectory = trajectory_json(spec.name, i, seed, ep);
      return r;
    });
  });
  for (EpisodeRecord& r : recs)
    if (!r.trajectory.empty()) res.trajectories.push_back(std::move(r.trajectory));
  ResultRow row = aggregate(spec.name, recs);
  row.value = eq.value[static_cast<std::size_t>(pg.start(setup.start))];
  rate_checks(spec, opt, res, row.rate());
  res.table.add(std::move(row));
}

void run_delay_sweep(const ExperimentSpec& spec, const RunOptions& opt, ExperimentResult& res) {
  const WorldConfig base = world_config(spec);
  std::vector<double> values;
  for (int k : spec.delays) {
    WorldConfig cfg = base;
    cfg.cooldown = k;
    note(opt, "[" + spec.name + "] delay " + std::to_string(k));
    Setup setup(spec, cfg, true);
    setup.plan(spec);
    ResultRow row = deceptive_row(spec, setup, "k=" + std::to_string(k), opt, res);
    values.push_back(row.value);
    res.table.add(std::move(row));
  }
  if (spec.expect.nondecreasing_values) {
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0 && !(values[i] >= values[i - 1] - 1e-9)) ok = false;
      detail += (i ? " " : "") + fmt(values[i]);
    }
    res.checks.push_back({"nondecreasing_values", ok, detail});
  }
}

// P2 switching to uniform play at a given step.
class DeviatingActor : public Actor {
 public:
  DeviatingActor(const ConcurrentGame& game, Actor& nominal, int deviation_step)
      : game_(&game), nominal_(&nominal), deviation_(deviation_step) {}
  void begin(int s0) override {
    t_ = 0;
    nominal_->begin(s0);
  }
  int act(int s, Rng& rng) override {
    bool deviate = deviation_ >= 0 && t_++ >= deviation_;
    if (!deviate) return nominal_->act(s, rng);
    const auto& a = game_->p2_actions(s);
    return a[static_cast<std::size_t>(rng() % a.size())];
  }
  void observe(const Observation& y) override { nominal_->observe(y); }

 private:
  const ConcurrentGame* game_;
  Actor* nominal_;
  int deviation_;
  int t_ = 0;
};

void run_mismatch(const ExperimentSpec& spec, const RunOptions& opt, ExperimentResult& res) {
  if (spec.planner != Planner::kValueIteration) throw std::invalid_argument("planner: the mismatch demo needs the hypergame model");
  Setup setup(spec, world_config(spec), true);
  setup.plan(spec);
  const TestKind kind = spec.test.value_or(default_test(*setup.space));
  std::ostringstream timeline;
  timeline << "episode,step,test,statistic,threshold,dof,reject,matrix_statistic,policy_statistic\n";
  // The monitor interns window classes in the shared model, so episodes run in order.
  auto recs = stage("simulate", [&] {
    return run_episodes(spec.episodes, 1, [&](long i) {
      std::uint64_t seed = episode_seed(spec.seed, i);
      Rng rng(seed);
      DeceptiveActor p1(*setup.hyper, *setup.policy);
      BsrActor nominal(*setup.space, spec.detector);
      DeviatingActor p2(setup.world.game(), nominal, spec.deviation_step);
      MismatchMonitor monitor(*setup.hyper, spec.alpha, kind);
      monitor.begin(setup.start);
      SimulationOptions so;
      so.horizon = spec.horizon;
      so.start = setup.start;
      so.stop = [&](const Observation& y) {
        bool reject = monitor.observe(y);
        const TestReport& a = monitor.active();
        timeline << i << ',' << a.step << ',' << test_name(kind) << ',' << a.statistic << ',' << a.threshold << ','
                 << a.dof << ',' << (reject ? 1 : 0) << ',' << monitor.matrix().statistic << ','
                 << monitor.policy().statistic << '\n';
        return reject;
      };
      Episode ep = simulate(setup.world.game(), setup.task, p1, p2, rng, so);
      EpisodeRecord r;
      r.outcome = ep.outcome;
      r.length = static_cast<long>(ep.history.length());
      if (ep.outcome == Outcome::kMismatchStop) r.stop_step = monitor.active().step;
      if (opt.record_trajectories) r.trajectory = trajectory_json(spec.name, i, seed, ep);
      return r;
    });
  });
  for (EpisodeRecord& r : recs)
    if (!r.trajectory.empty()) res.trajectories.push_back(std::move(r.trajectory));
  ResultRow row = aggregate(spec.name, recs);
  row.value = setup.policy->initial_value();
  row.bounded_value = setup.policy->bounded_initial_value();
  if (spec.expect.max_median_stop)
    check_at_most(res, "max_median_stop", row.stops > 0 ? row.median_stop : kInf, spec.expect.max_median_stop);
  res.table.add(std::move(row));
  res.timeline = timeline.str();
}

// Synthetic level-k trajectories with Poisson levels, then the running
// estimate of the Poisson mean per replication.
void run_lambda(const ExperimentSpec& spec, const RunOptions& opt, ExperimentResult& res) {
  const auto& L = spec.lambda;
  GridWorld world = stage("world", [&] { return GridWorld(world_config(spec)); });
  const ConcurrentGame& g = world.game();
  SubgoalGame sg = stage("subgoal", [&] { return SubgoalGame(g, g.atom_index(L.waypoint), pursuit_caught); });
  note(opt, "[" + spec.name + "] level stack");
  LevelStack stack = stage("level stack", [&] { return build_level_stack(sg, L.levels, spec.stack); });
  const int s0 = spec.pursuit_start ? world.encode_pursuit(*spec.pursuit_start) : g.initial();

  std::ostringstream timeline;
  timeline << "replication,trajectory,level,lambda\n";
  ResultRow within;
  within.label = "within_tolerance";
  const double tol = spec.expect.lambda_tolerance.value_or(0.3);
  for (int rep = 0; rep < L.replications; ++rep) {
    Rng rng(episode_seed(spec.seed, rep));
    std::poisson_distribution<int> levels(L.truth);
    PoissonEstimate est(L.levels);
    long steps = 0;
    for (int i = 0; i < L.trajectories; ++i) {
      int k = std::min(L.levels, levels(rng));
      const Profile& p2 = stack.level[static_cast<std::size_t>(k)];
      const Profile& p1 = stack.level[static_cast<std::size_t>(std::max(k - 1, 0))];
      History h;
      h.states.push_back(s0);
      for (int t = 1; t < L.length && !sg.absorbing(h.states.back()); ++t) {
        int s = h.states.back();
        int a1 = sample_index(p1.p1(s), rng), a2 = sample_index(p2.p2(s), rng);
        h.actions.push_back({a1, a2});
        h.states.push_back(g.step(s, a1, a2, rng));
      }
      steps += static_cast<long>(h.length());
      est.update(score_levels(g, h, stack, L.tau, L.scoring));
      timeline << rep << ',' << i << ',' << k << ',' << est.lambda() << '\n';
    }
    ResultRow row;
    row.label = "rep" + std::to_string(rep);
    row.episodes = L.trajectories;
    row.mean_length = static_cast<double>(steps) / L.trajectories;
    row.value = est.lambda();
    res.table.add(std::move(row));
    ++within.episodes;
    if (std::abs(est.lambda() - L.truth) <= tol) ++within.satisfied;
  }
  check_at_least(res, "min_within_fraction", within.rate(), spec.expect.min_within_fraction);
  res.table.add(std::move(within));
  res.timeline = timeline.str();
}

}  // namespace

InferenceTrace replay_inference(const ExperimentSpec& spec, const History& history) {
  Setup setup(spec, world_config(spec), true);
  const HypothesisSpace& space = *setup.space;
  InferenceTrace out;
  for (int x = 0; x < space.size(); ++x) out.hypotheses.push_back(space[x].name);
  Cusum cusum(space.size(), space.initial(), spec.detector);
  std::vector<double> row(static_cast<std::size_t>(space.size()));
  for (const Observation& y : observations_of(history)) {
    if (y.from < 0 || y.from >= setup.world.game().num_states() || y.to < 0 || y.to >= setup.world.game().num_states())
      throw std::invalid_argument("replay: state id outside the world");
    space.log_likelihoods(y, row);
    auto hit = cusum.push(row);
    out.steps.push_back({cusum.steps(), cusum.nominal(), hit.has_value(), {cusum.scores().begin(), cusum.scores().end()}});
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  ExperimentResult res;
  res.name = spec.name.empty() ? protocol_name(spec.protocol) : spec.name;
  switch (spec.protocol) {
    case Protocol::kDeceptive: run_deceptive(spec, options, res); break;
    case Protocol::kNash: run_nash(spec, options, res); break;
    case Protocol::kDelaySweep: run_delay_sweep(spec, options, res); break;
    case Protocol::kMismatch: run_mismatch(spec, options, res); break;
    case Protocol::kLambda: run_lambda(spec, options, res); break;
  }
  return res;
}

}  // namespace dhg
