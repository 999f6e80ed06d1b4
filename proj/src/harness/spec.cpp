#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "dhg/harness.hpp"
#include "dhg/worlds.hpp"

namespace dhg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw std::invalid_argument("experiment spec: " + field + ": " + msg);
}

// Rejects keys outside `allowed`; typos otherwise pass silently.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) fail(where.empty() ? k : where + "." + k, "unknown key");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(where.empty() ? key : where + "." + key, e.what());
  }
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key)) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

Cell read_cell(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

TestKind parse_test(const std::string& s) {
  if (s == "matrix") return TestKind::kMatrix;
  if (s == "policy") return TestKind::kPolicy;
  fail("detector.test", "expected matrix or policy, got '" + s + "'");
}

}  // namespace

Protocol parse_protocol(const std::string& s) {
  if (s == "deceptive") return Protocol::kDeceptive;
  if (s == "nash") return Protocol::kNash;
  if (s == "delay_sweep") return Protocol::kDelaySweep;
  if (s == "mismatch") return Protocol::kMismatch;
  if (s == "lambda") return Protocol::kLambda;
  fail("protocol", "unknown protocol '" + s + "'");
}

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kDeceptive: return "deceptive";
    case Protocol::kNash: return "nash";
    case Protocol::kDelaySweep: return "delay_sweep";
    case Protocol::kMismatch: return "mismatch";
    case Protocol::kLambda: return "lambda";
  }
  return "?";
}

ExperimentSpec parse_experiment(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("", std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "", {"name", "note", "reconstructed_geometry", "protocol", "world", "formula", "hypotheses",
                     "initial_hypothesis", "inference", "detector", "planner", "p2", "episodes", "seed", "horizon",
                     "start", "delays", "deviation_step", "lambda", "expect"});
  ExperimentSpec s;
  read(j, "name", s.name, "");
  if (j.contains("protocol")) s.protocol = parse_protocol(j["protocol"].get<std::string>());
  read(j, "world", s.world, "");
  read(j, "formula", s.formula, "");
  read(j, "hypotheses", s.hypotheses, "");
  read(j, "initial_hypothesis", s.initial_hypothesis, "");
  read(j, "episodes", s.episodes, "");
  read(j, "seed", s.seed, "");
  read(j, "horizon", s.horizon, "");
  read(j, "delays", s.delays, "");
  read(j, "deviation_step", s.deviation_step, "");

  if (j.contains("inference")) {
    const json& i = j["inference"];
    check_keys(i, "inference", {"window", "threshold", "tie"});
    read(i, "window", s.detector.window, "inference");
    read(i, "threshold", s.detector.threshold, "inference");
    if (i.contains("tie")) {
      std::string t = i["tie"].get<std::string>();
      if (t == "lowest") s.detector.tie = TieRule::kLowestIndex;
      else if (t == "uniform") s.detector.tie = TieRule::kUniform;
      else fail("inference.tie", "expected lowest or uniform");
    }
  }
  if (j.contains("detector")) {
    const json& d = j["detector"];
    check_keys(d, "detector", {"alpha", "test"});
    read(d, "alpha", s.alpha, "detector");
    if (d.contains("test")) {
      std::string t = d["test"].get<std::string>();
      if (t != "auto") s.test = parse_test(t);
    }
  }
  if (j.contains("planner")) {
    const json& p = j["planner"];
    check_keys(p, "planner", {"kind", "budget", "depth", "c", "gamma", "rollout", "noise"});
    std::string kind = p.value("kind", "vi");
    if (kind == "vi") s.planner = Planner::kValueIteration;
    else if (kind == "mcts") s.planner = Planner::kMcts;
    else fail("planner.kind", "expected vi or mcts");
    read(p, "budget", s.mcts.budget, "planner");
    read(p, "depth", s.mcts.depth, "planner");
    read(p, "c", s.mcts.exploration, "planner");
    read(p, "gamma", s.mcts.discount, "planner");
    read(p, "noise", s.rollout_noise, "planner");
    if (p.contains("rollout")) {
      std::string r = p["rollout"].get<std::string>();
      if (r == "guided") s.guided_rollout = true;
      else if (r == "uniform") s.guided_rollout = false;
      else fail("planner.rollout", "expected guided or uniform");
    }
  }
  if (j.contains("p2")) {
    const json& p = j["p2"];
    check_keys(p, "p2", {"level", "temperature", "discount"});
    read(p, "level", s.p2_level, "p2");
    read(p, "temperature", s.stack.temperature, "p2");
    read(p, "discount", s.stack.discount, "p2");
  }
  if (j.contains("start")) {
    const json& st = j["start"];
    check_keys(st, "start", {"p1", "p2"});
    if (!st.contains("p1") || !st.contains("p2")) fail("start", "needs p1 and p2 cells");
    s.pursuit_start = PursuitState{read_cell(st["p1"], "start.p1"), read_cell(st["p2"], "start.p2")};
  }
  if (j.contains("lambda")) {
    const json& l = j["lambda"];
    check_keys(l, "lambda", {"waypoint", "levels", "truth", "tau", "length", "trajectories", "replications", "scoring"});
    read(l, "waypoint", s.lambda.waypoint, "lambda");
    read(l, "levels", s.lambda.levels, "lambda");
    read(l, "truth", s.lambda.truth, "lambda");
    read(l, "tau", s.lambda.tau, "lambda");
    read(l, "length", s.lambda.length, "lambda");
    read(l, "trajectories", s.lambda.trajectories, "lambda");
    read(l, "replications", s.lambda.replications, "lambda");
    if (l.contains("scoring")) {
      std::string sc = l["scoring"].get<std::string>();
      if (sc == "raw") s.lambda.scoring = LevelScoring::kRaw;
      else if (sc == "log") s.lambda.scoring = LevelScoring::kLog;
      else fail("lambda.scoring", "expected raw or log");
    }
  }
  if (j.contains("expect")) {
    const json& e = j["expect"];
    check_keys(e, "expect", {"min_rate", "max_rate", "min_gap", "versus", "nondecreasing_values", "max_median_stop",
                             "max_start_value", "lambda_tolerance", "min_within_fraction"});
    Expectations& x = s.expect;
    read_opt(e, "min_rate", x.min_rate, "expect");
    read_opt(e, "max_rate", x.max_rate, "expect");
    read_opt(e, "min_gap", x.min_gap, "expect");
    read(e, "versus", x.versus, "expect");
    read(e, "nondecreasing_values", x.nondecreasing_values, "expect");
    read_opt(e, "max_median_stop", x.max_median_stop, "expect");
    read_opt(e, "max_start_value", x.max_start_value, "expect");
    read_opt(e, "lambda_tolerance", x.lambda_tolerance, "expect");
    read_opt(e, "min_within_fraction", x.min_within_fraction, "expect");
    if (x.min_gap && x.versus.empty()) fail("expect.min_gap", "needs expect.versus");
  }

  if (s.episodes < 1) fail("episodes", "must be at least 1");
  if (s.horizon < 1) fail("horizon", "must be at least 1");
  if (s.alpha <= 0.0 || s.alpha >= 1.0) fail("detector.alpha", "must lie in (0, 1)");
  if (s.detector.window < 0) fail("inference.window", "must be non-negative");
  if (s.detector.threshold <= 0.0) fail("inference.threshold", "must be positive");
  if (s.mcts.budget < 1 || s.mcts.depth < 1) fail("planner", "budget and depth must be positive");
  if (s.protocol != Protocol::kLambda) {
    if (s.formula.empty()) fail("formula", "required");
    if (s.protocol != Protocol::kNash && s.hypotheses.empty()) fail("hypotheses", "required");
    if (s.initial_hypothesis < 0 || s.initial_hypothesis >= std::max<int>(1, static_cast<int>(s.hypotheses.size())))
      fail("initial_hypothesis", "out of range");
  }
  if (s.protocol == Protocol::kDelaySweep && s.delays.empty()) fail("delays", "required");
  if (s.protocol == Protocol::kLambda) {
    const auto& l = s.lambda;
    if (l.levels < 1 || l.length < 1 || l.trajectories < 1 || l.replications < 1 || l.tau <= 0.0 || l.truth < 0.0)
      fail("lambda", "levels, length, trajectories, replications and tau must be positive");
  }
  return s;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("experiment spec: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentSpec s = parse_experiment(ss.str());
  if (s.name.empty()) s.name = std::filesystem::path(path).stem().string();
  // referenced world must exist
  if (!std::filesystem::exists(world_path(s.world))) throw std::invalid_argument("experiment spec: world: no file " + world_path(s.world));
  return s;
}

std::string preset_path(const std::string& name_or_path) {
  if (name_or_path.find('/') != std::string::npos || name_or_path.ends_with(".json")) return name_or_path;
  return std::string(DHG_PRESETS_DIR) + "/" + name_or_path + ".json";
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(DHG_PRESETS_DIR))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t episode_seed(std::uint64_t master, long index) {
  return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(index));
}

double ResultRow::standard_error() const {
  if (episodes <= 0) return 0.0;
  double p = rate();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(episodes));
}

const ResultRow* ResultTable::find(const std::string& label) const {
  for (const ResultRow& r : rows_)
    if (r.label == label) return &r;
  return nullptr;
}

void ResultTable::write_csv(std::ostream& out) const {
  auto num = [&out](double x) {
    if (!std::isnan(x)) out << x;
  };
  out << "label,episodes,satisfied,failed,timeouts,stops,rate,se,mean_length,value,bounded_value,median_stop\n";
  out << std::setprecision(6);
  for (const ResultRow& r : rows_) {
    out << r.label << ',' << r.episodes << ',' << r.satisfied << ',' << r.failed << ',' << r.timeouts << ',' << r.stops
        << ',' << r.rate() << ',' << r.standard_error() << ',' << r.mean_length << ',';
    num(r.value);
    out << ',';
    num(r.bounded_value);
    out << ',';
    num(r.median_stop);
    out << '\n';
  }
}

std::string ResultTable::csv() const {
  std::ostringstream ss;
  write_csv(ss);
  return ss.str();
}

bool ExperimentResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void write_outputs(const ExperimentResult& result, const std::string& dir) {
  std::filesystem::path base = std::filesystem::path(dir) / result.name;
  std::filesystem::create_directories(base);
  auto put = [&](const char* file, const std::string& text) {
    std::ofstream out(base / file);
    if (!out) throw std::runtime_error("cannot write " + (base / file).string());
    out << text;
  };
  put("table.csv", result.table.csv());
  if (!result.timeline.empty()) put("timeline.csv", result.timeline);
  if (!result.trajectories.empty()) {
    std::string lines;
    for (const std::string& t : result.trajectories) lines += t + '\n';
    put("trajectories.jsonl", lines);
  }
  if (!result.checks.empty()) {
    std::string lines = "check,pass,detail\n";
    for (const CheckResult& c : result.checks) lines += c.name + ',' + (c.pass ? "1" : "0") + ",\"" + c.detail + "\"\n";
    put("checks.csv", lines);
  }
}

}  // namespace dhg
