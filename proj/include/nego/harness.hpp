#pragma once

// Monte Carlo experiment runner: per-trial reserve/κ sampling, oversight runs,
// bound verification, baselines, and CSV/JSON export.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nego/analysis.hpp"
#include "nego/baselines.hpp"
#include "nego/candidates.hpp"
#include "nego/ctop.hpp"
#include "nego/model.hpp"
#include "nego/taco.hpp"

namespace nego::harness {

enum class ScenarioMode {
  kFixed,     // one instance shared by every trial
  kPerTrial,  // a fresh generated instance per trial, seeded from the trial id
};

struct ExperimentConfig {
  std::size_t trials = 1000;
  ScenarioMode mode = ScenarioMode::kFixed;
  ctop::GeneratorParams generator;
  std::optional<std::filesystem::path> scenario_file;
  double reserve_lo = 1.0;
  double reserve_hi = 20.0;
  double k_lo = -1.0;  // κ = 10^k, k ~ Unif(k_lo, k_hi)
  double k_hi = 2.0;
  std::uint64_t seed = 2024;
  SolverConfig solver;
  taco::TacoParams taco;
  double indifference_per_bmax = 1e-3;
  bool baselines = true;
  std::size_t threads = 1;
  std::filesystem::path out_dir = "results";

  void validate() const;
};

ExperimentConfig config_from_json_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_json_string(const ExperimentConfig& config);

struct TrialParams {
  Reserves reserves;
  double k = 0.0;
  double kappa = 1.0;
};

/// Deterministic in (config.seed, trial).
TrialParams sample_trial_params(const ExperimentConfig& config, std::size_t trial, std::size_t agents);

struct BaselineSummary {
  baselines::Mechanism mechanism;
  std::uint64_t choice = 0;
  double system_cost = 0.0;
  double gini = 0.0;

  friend bool operator==(const BaselineSummary&, const BaselineSummary&) = default;
};

struct TrialRecord {
  std::size_t trial = 0;
  Reserves reserves;
  double kappa = 0.0;
  double b_mean = 0.0;
  bool ok = false;
  std::string error;  // set when the trial failed
  std::size_t r_term = 0;
  std::size_t r_bound = 0;
  double b_max = 0.0;
  std::uint64_t agreed_choice = 0;
  double cost_first = 0.0;
  double cost_final = 0.0;
  double gini_first = 0.0;
  double gini_final = 0.0;
  double optimum = 0.0;
  double gap = 0.0;
  double gap_bound = 0.0;
  bool gap_checked = true;
  // Largest ratios observed over all rounds (observed / bound); ≤ 1 means no violation.
  double worst_eta_ratio = 0.0;
  double worst_spread_ratio = 0.0;
  double worst_payer_excess = 0.0;  // max(b e - bound); ≤ 0 means no violation
  double max_conservation_residual = 0.0;
  std::size_t violations_termination = 0;
  std::size_t violations_gap = 0;
  std::size_t violations_selection = 0;
  std::size_t violations_flattening = 0;
  std::size_t violations_payer = 0;
  std::size_t violations_delta = 0;
  std::size_t violations_feasibility = 0;
  std::size_t violations_conservation = 0;
  std::vector<BaselineSummary> baselines;
  double wall_seconds = 0.0;

  double cost_ratio() const;
  double gini_ratio() const;

  // Equality ignores wall time.
  bool same_result(const TrialRecord& other) const;
};

/// Runs one trial in isolation.
TrialRecord run_trial(const ExperimentConfig& config, std::size_t trial, const Scenario* fixed_scenario);

/// One record per trial, ordered by trial id. Trial failures are captured in
/// the record. Output does not depend on config.threads.
std::vector<TrialRecord> run_monte_carlo(const ExperimentConfig& config);

enum class Format { kCsv, kJson };

std::string csv_header();
/// Oversight row plus one row per baseline for each trial, ordered by trial id.
std::string to_csv(const std::vector<TrialRecord>& records);
std::string to_json_string(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_json_string(const std::string& text);

/// Writes records to `path`; throws std::runtime_error naming the path on I/O failure.
void export_results(const std::vector<TrialRecord>& records, Format format, const std::filesystem::path& path);

/// Text file helpers shared with the CLI.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nego::harness
