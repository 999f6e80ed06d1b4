#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dhg/detect.hpp"
#include "dhg/mcts.hpp"
#include "dhg/opponent.hpp"
#include "dhg/worlds.hpp"

// Experiment runner: JSON experiment specs (bundled presets or files), per
// episode seeds, result tables and threshold checks.
namespace dhg {

enum class Protocol { kDeceptive, kNash, kDelaySweep, kMismatch, kLambda };
enum class Planner { kValueIteration, kMcts };

struct Expectations {
  std::optional<double> min_rate, max_rate;
  std::optional<double> min_gap;  // rate of this run minus the `versus` preset's rate
  std::string versus;
  bool nondecreasing_values = false;
  std::optional<double> max_median_stop;
  std::optional<double> max_start_value;  // symmetric-information value at the start
  std::optional<double> lambda_tolerance;
  std::optional<double> min_within_fraction;
};

struct ExperimentSpec {
  std::string name;
  Protocol protocol = Protocol::kDeceptive;
  std::string world = "world1";
  std::string formula;
  std::vector<std::string> hypotheses;  // formulas (trap worlds) or waypoint names (pursuit)
  int initial_hypothesis = 0;
  CusumConfig detector;
  double alpha = 0.05;
  std::optional<TestKind> test;  // default_test() when empty
  Planner planner = Planner::kValueIteration;
  mcts::Options mcts;
  bool guided_rollout = true;
  double rollout_noise = 0.2;
  int p2_level = 2;
  SoftViOptions stack;
  int episodes = 2000;
  std::uint64_t seed = 1;
  int horizon = 200;
  std::optional<PursuitState> pursuit_start;
  std::vector<int> delays{0, 1, 2, 3};
  int deviation_step = 4;  // < 0: P2 never deviates

  struct Lambda {
    std::string waypoint = "g1";
    int levels = 4;
    double truth = 2.0;
    double tau = 1e-2;
    int length = 11;  // states per trajectory
    int trajectories = 100;
    int replications = 20;
    LevelScoring scoring = LevelScoring::kRaw;
  } lambda;

  Expectations expect;
};

ExperimentSpec parse_experiment(const std::string& json_text);
ExperimentSpec load_experiment(const std::string& path);
// Resolves bare names against the bundled presets directory.
std::string preset_path(const std::string& name_or_path);
std::vector<std::string> preset_names();
Protocol parse_protocol(const std::string& s);
const char* protocol_name(Protocol p);

std::uint64_t episode_seed(std::uint64_t master, long index);

struct ResultRow {
  std::string label;
  long episodes = 0;
  long satisfied = 0;
  long failed = 0;
  long timeouts = 0;
  long stops = 0;  // episodes ended by the mismatch detector
  double mean_length = 0.0;
  double value = std::numeric_limits<double>::quiet_NaN();          // model value at the start
  double bounded_value = std::numeric_limits<double>::quiet_NaN();  // value within the horizon
  double median_stop = std::numeric_limits<double>::quiet_NaN();

  double rate() const { return episodes > 0 ? static_cast<double>(satisfied) / static_cast<double>(episodes) : 0.0; }
  double standard_error() const;
};

class ResultTable {
 public:
  void add(ResultRow row) { rows_.push_back(std::move(row)); }
  const std::vector<ResultRow>& rows() const { return rows_; }
  const ResultRow* find(const std::string& label) const;
  void write_csv(std::ostream& out) const;
  std::string csv() const;

 private:
  std::vector<ResultRow> rows_;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  ResultTable table;
  // Per-step CSV (detector statistics, lambda trajectory), empty if none.
  std::string timeline;
  // One JSON record per episode when requested.
  std::vector<std::string> trajectories;
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

struct RunOptions {
  bool record_trajectories = false;
  int threads = 0;  // 0: hardware concurrency
  // Results of other presets, for checks that compare against them.
  std::function<const ExperimentResult*(const std::string&)> lookup;
  std::ostream* log = nullptr;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

// P2's detector replayed over a recorded history, with the spec's hypothesis
// space (trap or pursuit world).
struct InferenceStep {
  long step = 0;
  int nominal = 0;
  bool switched = false;
  std::vector<double> scores;
};
struct InferenceTrace {
  std::vector<std::string> hypotheses;
  std::vector<InferenceStep> steps;
};
InferenceTrace replay_inference(const ExperimentSpec& spec, const History& history);

// Writes table.csv, timeline.csv and trajectories.jsonl (when present) under dir/name.
void write_outputs(const ExperimentResult& result, const std::string& dir);

}  // namespace dhg
