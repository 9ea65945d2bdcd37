#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salmut/event_model.hpp"
#include "salmut/schedule.hpp"
#include "salmut/trace.hpp"

namespace salmut {

struct ExperimentConfig {
  QueueConfig model;
  std::string algorithm = "salmut";  // salmut | qlearning | pds | all
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  long long max_iterations = 100000;
  int stride = 10;          // trace record spacing in iterations
  double window = 50.0;     // stopping window, cumulative-step-size units
  double zeta = 0.95;       // stopping min/max ratio
  int burn_in = 10;         // trace records ignored by the stopping rule
  bool window_in_records = false;
  bool include_g_term = true;
  double epsilon = 0.1;     // exploration rate for the Q baseline
  StepSchedule schedule{};
  PowerSchedule rho_schedule{1.0, 0.0, 1.0};

  void validate() const;
};

// Accepts either the full experiment schema (model nested under "model")
// or a bare model config, in which case all experiment knobs keep their
// defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct SeedRun {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<TraceRecord> trace;
  numvec final_thresholds;              // as traced
  std::vector<int> reported_thresholds; // rounded half-up, or greedy read-off
  std::optional<long long> convergence_n;
  double final_rho = 0.0;
  double final_sigma = 0.0;  // oracle average reward of the reported policy
};

struct AlgorithmSummary {
  std::string name;
  long long storage = 0;
  int max_value_writes = 0;
  int max_threshold_writes = 0;
  std::vector<SeedRun> runs;
  // medians treat a run that never satisfied the stopping rule as +inf
  double median_convergence_n = 0.0;
  double median_final_sigma = 0.0;
  double median_final_rho = 0.0;
};

struct ExperimentSummary {
  ExperimentConfig config;
  std::vector<int> tau_star;
  double sigma_star = 0.0;
  std::vector<AlgorithmSummary> algorithms;

  const AlgorithmSummary* find(const std::string& name) const;
};

// Runs every (algorithm, seed) pair concurrently, evaluates final policies
// against the exact solver, and, when out_dir is nonempty, writes one
// trace CSV per run plus summary.json. A failing run is recorded in the
// summary instead of aborting the batch.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir = "");

double median(std::vector<double> xs);

struct CompareChecks {
  bool ok = true;
  std::vector<std::string> failures;
};

// Consistency checks over a completed three-algorithm summary: storage
// counts, per-iteration write bounds, convergence-order medians, and
// final-policy quality against the exact optimum.
CompareChecks compare_checks(const ExperimentSummary& summary);

// Runs all three algorithms and renders the comparison table.
ExperimentSummary compare(ExperimentConfig cfg, const std::string& out_dir = "");
std::string comparison_table(const ExperimentSummary& summary);

}  // namespace salmut
