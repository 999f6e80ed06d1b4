// Command-line front end: compile formulas, solve games, run experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dhg/harness.hpp"
#include "dhg/hypergame.hpp"
#include "dhg/scltl.hpp"
#include "dhg/solvers.hpp"
#include "dhg/worlds.hpp"

namespace {

using namespace dhg;

struct Overrides {
  std::optional<long> episodes;
  std::optional<std::uint64_t> seed;
  std::string planner;
  int threads = 0;
  std::string out_dir = "results";
  bool trajectories = false;
  bool check = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--episodes", o.episodes, "Episode count")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--planner", o.planner, "P1 planner")->check(CLI::IsMember({"vi", "mcts"}));
  cmd->add_option("--threads", o.threads, "Episode threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out-dir", o.out_dir, "Directory for CSV and trajectory output");
  cmd->add_flag("--trajectories", o.trajectories, "Write one JSON line per episode");
  cmd->add_flag("--check", o.check, "Exit non-zero when an expectation of the spec fails");
}

ExperimentSpec load_spec(const std::string& name, const Overrides& o) {
  ExperimentSpec s = load_experiment(preset_path(name));
  if (o.episodes) s.episodes = static_cast<int>(*o.episodes);
  if (o.seed) s.seed = *o.seed;
  if (o.planner == "vi") s.planner = Planner::kValueIteration;
  if (o.planner == "mcts") s.planner = Planner::kMcts;
  return s;
}

void report(const ExperimentResult& r, const Overrides& o) {
  std::cout << "# " << r.name << '\n' << r.table.csv();
  for (const CheckResult& c : r.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << r.name << ' ' << c.name << ": " << c.detail << '\n';
  write_outputs(r, o.out_dir);
  std::cout.flush();
}

// Runs presets by name, running referenced ones on demand for comparisons.
class Runner {
 public:
  explicit Runner(const Overrides& o) : o_(o) {}

  const ExperimentResult& run(const std::string& name) {
    if (auto it = done_.find(name); it != done_.end()) return it->second;
    ExperimentSpec spec = load_spec(name, o_);
    RunOptions ro;
    ro.threads = o_.threads;
    ro.record_trajectories = o_.trajectories;
    ro.log = &std::cerr;
    ro.lookup = [this](const std::string& other) -> const ExperimentResult* { return &run(other); };
    std::cerr << "running " << spec.name << " (" << protocol_name(spec.protocol) << ")" << std::endl;
    ExperimentResult r = run_experiment(spec, ro);
    report(r, o_);
    return done_.emplace(name, std::move(r)).first->second;
  }

  bool all_pass() const {
    for (const auto& [n, r] : done_)
      if (!r.all_pass()) return false;
    return true;
  }

 private:
  Overrides o_;
  std::map<std::string, ExperimentResult> done_;
};

int run_with_protocol(const std::string& name, const Overrides& o, std::optional<Protocol> force,
                      const std::function<void(ExperimentSpec&)>& tweak = {}) {
  ExperimentSpec spec = load_spec(name, o);
  if (force) spec.protocol = *force;
  if (tweak) tweak(spec);
  RunOptions ro;
  ro.threads = o.threads;
  ro.record_trajectories = o.trajectories;
  ro.log = &std::cerr;
  ExperimentResult r = run_experiment(spec, ro);
  report(r, o);
  return o.check && !r.all_pass() ? 1 : 0;
}

std::vector<std::string> split_atoms(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string a; std::getline(ss, a, ',');)
    if (!a.empty()) out.push_back(a);
  return out;
}

History read_history(const std::string& path, long episode) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  for (long i = 0; std::getline(in, line); ++i) {
    if (i != episode) continue;
    auto j = nlohmann::json::parse(line);
    History h;
    h.states = j.at("states").get<std::vector<int>>();
    auto a1 = j.at("p1").get<std::vector<int>>();
    auto a2 = j.at("p2").get<std::vector<int>>();
    if (a1.size() != a2.size() || h.states.size() != a1.size() + 1)
      throw std::invalid_argument("trajectory record: states must be one longer than the action lists");
    for (std::size_t t = 0; t < a1.size(); ++t) h.actions.push_back({a1[t], a2[t]});
    return h;
  }
  throw std::invalid_argument(path + ": no record " + std::to_string(episode));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deceptive planning in hypergames with inferred opponent objectives"};
  app.require_subcommand(1);

  // compile
  std::string formula, atoms, world = "world1";
  auto* compile_cmd = app.add_subcommand("compile", "Compile a co-safe formula to its automaton");
  compile_cmd->add_option("formula", formula)->required();
  compile_cmd->add_option("--atoms", atoms, "Comma-separated atoms (default: the world's)");
  compile_cmd->add_option("--world", world, "World whose atoms to use");

  // solve
  std::string method = "shapley";
  auto* solve_cmd = app.add_subcommand("solve", "Value of a task in a world under symmetric information");
  solve_cmd->add_option("formula", formula)->required();
  solve_cmd->add_option("--world", world);
  solve_cmd->add_option("--method", method)->check(CLI::IsMember({"shapley", "stackelberg"}));

  Overrides o;
  std::string spec_name;

  auto* synth_cmd = app.add_subcommand("synthesize", "Build the hypergame model of a spec and solve it");
  synth_cmd->add_option("spec", spec_name, "Preset name or spec path")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Deceptive P1 against P2's inference, per the spec");
  sim_cmd->add_option("spec", spec_name)->required();
  add_run_flags(sim_cmd, o);

  int deviation = 4;
  auto* detect_cmd = app.add_subcommand("detect", "Mismatch detection with P2 deviating to uniform play");
  detect_cmd->add_option("spec", spec_name)->required();
  detect_cmd->add_option("--deviation", deviation, "Step at which P2 deviates; negative for never");
  add_run_flags(detect_cmd, o);

  std::string trajectories;
  long episode = 0;
  auto* infer_cmd = app.add_subcommand("infer", "Replay P2's detector over a recorded trajectory");
  infer_cmd->add_option("spec", spec_name)->required();
  infer_cmd->add_option("trajectories", trajectories, "JSON-lines trajectory file")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--episode", episode, "Record index");

  auto* lambda_cmd = app.add_subcommand("learn-lambda", "Estimate the opponent's reasoning depth on synthetic traces");
  lambda_cmd->add_option("spec", spec_name)->default_val("lambda_validation");
  add_run_flags(lambda_cmd, o);

  bool list = false;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a preset, a spec file, or all presets");
  exp_cmd->add_option("spec", spec_name, "Preset name, spec path, or 'all'");
  exp_cmd->add_flag("--list", list, "List presets");
  add_run_flags(exp_cmd, o);

  auto* world_cmd = app.add_subcommand("world", "World files");
  world_cmd->require_subcommand(1);
  std::string world_file;
  auto* validate_cmd = world_cmd->add_subcommand("validate", "Check a world file and summarize it");
  validate_cmd->add_option("world", world_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile_cmd) {
      std::vector<std::string> names = atoms.empty() ? GridWorld(load_world(world_path(world))).game().atoms() : split_atoms(atoms);
      scltl::Dfa d = scltl::compile(formula, names);
      std::cout << "states " << d.num_states() << ", edges " << d.distinct_edges().size() << ", sink "
                << (d.sink() ? std::to_string(*d.sink()) : "none") << '\n'
                << d.dump();
      return 0;
    }
    if (*solve_cmd) {
      GridWorld w(load_world(world_path(world)));
      scltl::Dfa d = scltl::compile(formula, w.game().atoms());
      ProductGame pg(w.game(), d);
      if (method == "shapley") {
        ShapleyResult r = shapley_vi(pg);
        std::cout << "value " << r.value[static_cast<std::size_t>(pg.initial())] << " sweeps " << r.sweeps << '\n';
      } else {
        StackelbergResult r = stackelberg_response(pg);
        std::cout << "value " << r.value[static_cast<std::size_t>(pg.initial())] << " sweeps " << r.sweeps << '\n';
      }
      return 0;
    }
    if (*synth_cmd) {
      ExperimentSpec s = load_spec(spec_name, o);
      s.planner = Planner::kValueIteration;
      s.episodes = 1;
      RunOptions ro;
      ro.log = &std::cerr;
      ExperimentResult r = run_experiment(s, ro);
      for (const ResultRow& row : r.table.rows())
        if (!std::isnan(row.value))
          std::cout << row.label << ": value " << row.value << ", within " << s.horizon << " steps " << row.bounded_value << '\n';
      return 0;
    }
    if (*sim_cmd) {
      ExperimentSpec probe = load_spec(spec_name, o);
      std::optional<Protocol> force;
      if (probe.protocol != Protocol::kNash) force = Protocol::kDeceptive;
      return run_with_protocol(spec_name, o, force);
    }
    if (*detect_cmd)
      return run_with_protocol(spec_name, o, Protocol::kMismatch, [&](ExperimentSpec& s) { s.deviation_step = deviation; });
    if (*infer_cmd) {
      ExperimentSpec s = load_spec(spec_name, o);
      InferenceTrace t = replay_inference(s, read_history(trajectories, episode));
      std::cout << "step,nominal,switched";
      for (const std::string& h : t.hypotheses) std::cout << ",score[" << h << "]";
      std::cout << '\n';
      for (const InferenceStep& st : t.steps) {
        std::cout << st.step << ',' << t.hypotheses[static_cast<std::size_t>(st.nominal)] << ',' << (st.switched ? 1 : 0);
        for (double z : st.scores) std::cout << ',' << z;
        std::cout << '\n';
      }
      return 0;
    }
    if (*lambda_cmd) return run_with_protocol(spec_name, o, Protocol::kLambda);
    if (*exp_cmd) {
      if (list || spec_name.empty()) {
        for (const std::string& n : preset_names()) std::cout << n << '\n';
        return 0;
      }
      Runner runner(o);
      if (spec_name == "all") {
        for (const std::string& n : preset_names()) runner.run(n);
      } else {
        runner.run(spec_name);
      }
      return o.check && !runner.all_pass() ? 1 : 0;
    }
    if (*validate_cmd) {
      WorldConfig cfg = load_world(world_path(world_file));
      GridWorld w(cfg);
      std::cout << "ok: " << cfg.name << ' ' << cfg.width << 'x' << cfg.height << ", " << w.game().num_states()
                << " states, atoms";
      for (const std::string& a : w.game().atoms()) std::cout << ' ' << a;
      std::cout << '\n';
      return 0;
    }
  } catch (const WorldError& e) {
    std::cerr << "world error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
