// Command-line front end: single runs, Monte Carlo experiments, bound checks,
// scenario generation and baselines.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nego/analysis.hpp"
#include "nego/baselines.hpp"
#include "nego/ctop.hpp"
#include "nego/harness.hpp"
#include "nego/model.hpp"
#include "nego/oversight.hpp"
#include "nego/rng.hpp"

namespace fs = std::filesystem;
using namespace nego;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

struct Common {
  std::uint64_t seed = 2024;
  std::optional<double> kappa;
  std::string config;
  std::string out;
  std::size_t threads = 0;
};

void add_generator_flags(CLI::App* cmd, ctop::GeneratorParams& p) {
  cmd->add_option("--sectors", p.sectors, "number of sector agents")->check(CLI::PositiveNumber);
  cmd->add_option("--flights", p.flights, "number of flights")->check(CLI::PositiveNumber);
  cmd->add_option("--options", p.options, "trajectory options per flight")->check(CLI::PositiveNumber);
  cmd->add_option("--grid", p.grid, "cells per sector side")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", p.horizon, "number of time bins")->check(CLI::PositiveNumber);
}

SolverConfig parse_solver(const std::string& kind, int restarts, int moves) {
  SolverConfig s;
  s.kind = solver_kind_from_string(kind);
  s.restarts = restarts;
  s.moves = moves;
  return s;
}

Reserves default_reserves(std::uint64_t seed, std::size_t agents) {
  Rng rng(derive_seed(seed, {0x72657365ULL}));
  Reserves r;
  for (std::size_t i = 0; i < agents; ++i) r.push_back(rng.uniform(1.0, 20.0));
  return r;
}

void print_run(const RunRecord& rec) {
  std::printf("rounds      %zu (bound %zu)\n", rec.r_term, rec.round_bound);
  std::printf("agreed      %zu\n", rec.agreed.index);
  std::printf("B_max       %.6g\n", rec.b_max);
  for (const RoundEntry& e : rec.rounds) {
    std::printf("  round %zu  alpha=%g  pool=%zu  agreed=%zu  shortfall=%.6g  J_sys=%.6g  gini=%.4f\n", e.round,
                e.alpha, e.pool.size(), e.agreed.index, e.total_shortfall, e.system_cost, e.gini);
  }
}

int cmd_run(const Common& c, const std::string& scenario_path, const std::vector<double>& reserves_in,
            const SolverConfig& solver) {
  const Scenario scenario = load_scenario(scenario_path);
  const Reserves reserves = reserves_in.empty() ? default_reserves(c.seed, scenario.agents()) : reserves_in;
  OversightParams params;
  params.kappa = c.kappa.value_or(1.0);
  params.solver = solver;
  const RunRecord rec = run_oversight(scenario, reserves, params, c.seed);
  print_run(rec);
  if (!c.out.empty()) {
    harness::write_text(fs::path(c.out) / "run.json", to_json_string(rec));
    harness::write_text(fs::path(c.out) / "rounds.csv", csv_header_rounds() + to_csv_rows(rec, "run"));
    std::printf("wrote %s\n", (fs::path(c.out) / "run.json").string().c_str());
  }
  return kExitOk;
}

int cmd_montecarlo(const Common& c, std::optional<std::uint64_t> seed, std::optional<std::size_t> trials,
                   const std::string& mode) {
  harness::ExperimentConfig cfg = c.config.empty() ? harness::ExperimentConfig{} : harness::load_config(c.config);
  if (seed) cfg.seed = *seed;
  if (trials) cfg.trials = *trials;
  if (!mode.empty()) cfg.mode = mode == "fixed" ? harness::ScenarioMode::kFixed : harness::ScenarioMode::kPerTrial;
  if (c.threads > 0) cfg.threads = c.threads;
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  const auto records = harness::run_monte_carlo(cfg);
  const fs::path out = cfg.out_dir;
  harness::export_results(records, harness::Format::kCsv, out / "results.csv");
  harness::export_results(records, harness::Format::kJson, out / "results.json");
  harness::write_text(out / "config.json", harness::to_json_string(cfg));

  std::size_t failed = 0, violating = 0;
  for (const auto& r : records) {
    if (!r.ok) ++failed;
    if (r.violations_termination + r.violations_gap + r.violations_selection + r.violations_flattening +
            r.violations_payer + r.violations_delta + r.violations_feasibility + r.violations_conservation >
        0) {
      ++violating;
    }
  }
  std::printf("trials %zu  failed %zu  with bound violations %zu\n", records.size(), failed, violating);
  std::printf("wrote %s\n", (out / "results.csv").string().c_str());
  return kExitOk;
}

int cmd_verify(const Common& c, const std::string& record_path, const std::string& scenario_path,
               std::optional<std::size_t> desired_rounds, std::optional<double> target_gap) {
  const RunRecord rec = run_record_from_json_string(harness::read_text(record_path));
  std::optional<CostTable> table = rec.table;
  if (!scenario_path.empty()) table = load_scenario(scenario_path).require_table();
  if (!table) {
    std::fprintf(stderr, "record has no cost table; pass --scenario\n");
    return kExitUsage;
  }
  const analysis::BoundReport rep =
      analysis::verify_bounds(rec, *table, c.kappa.value_or(rec.kappa), {desired_rounds, target_gap});
  for (const auto& line : rep.lines()) {
    std::printf("%-30s %s  %s\n", line.name.c_str(), line.ok ? "PASS" : "FAIL", line.detail.c_str());
  }
  std::printf("kappa for %zu rounds      <= %.6g\n", desired_rounds.value_or(rep.round_bound), rep.kappa_max_for_rounds);
  if (rep.kappa_min_for_gap) std::printf("kappa needed for gap target  >= %.6g\n", *rep.kappa_min_for_gap);
  if (!c.out.empty()) harness::write_text(fs::path(c.out) / "bounds.json", analysis::to_json_string(rep));
  return rep.any_violation() ? kExitViolation : kExitOk;
}

int cmd_gen(const Common& c, const ctop::GeneratorParams& params) {
  const ctop::CtopInstance inst = ctop::generate_scenario(params, c.seed);
  const std::string text = ctop::to_json_string(inst);
  if (c.out.empty()) {
    std::cout << text << "\n";
  } else {
    const fs::path path = fs::path(c.out) / ("scenario-" + std::to_string(c.seed) + ".json");
    harness::write_text(path, text);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return kExitOk;
}

int cmd_baselines(const Common& c, const std::string& scenario_path, const SolverConfig& solver) {
  const Scenario scenario = load_scenario(scenario_path);
  std::vector<baselines::BaselineResult> results;
  results.push_back(baselines::centralized_ctop(scenario, solver));
  if (scenario.is_ctop()) results.push_back(baselines::fcfs_ctop(scenario));
  results.push_back(baselines::voting(scenario, c.seed, solver));
  std::string csv = "mechanism,choice,system_cost,gini\n";
  for (const auto& r : results) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g\n", baselines::to_string(r.mechanism).c_str(), r.choice.index,
                  r.system_cost, r.gini);
    csv += buf;
    std::printf("%-8s choice=%-6zu J_sys=%-12.6g gini=%.4f\n", baselines::to_string(r.mechanism).c_str(),
                r.choice.index, r.system_cost, r.gini);
  }
  if (!c.out.empty()) harness::write_text(fs::path(c.out) / "baselines.csv", csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Negotiation and oversight simulator"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", common.seed, "master seed");
    cmd->add_option("--out", common.out, "output directory");
  };

  std::string scenario_path, record_path, solver_kind = "exhaustive", mode;
  int restarts = 20, moves = 1000;
  std::vector<double> reserves;
  std::optional<std::size_t> trials, desired_rounds;
  std::optional<double> target_gap;
  ctop::GeneratorParams gen;

  auto* run = app.add_subcommand("run", "single oversight run on a scenario file");
  add_common(run);
  run->add_option("scenario", scenario_path, "scenario JSON (cost table or CTOP instance)")->required();
  run->add_option("--kappa", common.kappa, "tax parameter")->check(CLI::PositiveNumber);
  run->add_option("--reserves", reserves, "per-agent reserves (default: sampled from Unif(1,20))");
  run->add_option("--solver", solver_kind, "exhaustive or local-search");
  run->add_option("--restarts", restarts, "local-search restarts");
  run->add_option("--moves", moves, "local-search improving moves per restart");

  auto* mc = app.add_subcommand("montecarlo", "full Monte Carlo experiment");
  add_common(mc);
  mc->add_option("--config", common.config, "experiment config JSON");
  mc->add_option("--trials", trials, "override trial count");
  mc->add_option("--threads", common.threads, "worker threads")->envname("NEGO_THREADS");
  mc->add_option("--mode", mode, "fixed or per-trial")->check(CLI::IsMember({"fixed", "per-trial"}));

  auto* verify = app.add_subcommand("verify-bounds", "check a run record against every analytical bound");
  add_common(verify);
  verify->add_option("record", record_path, "run record JSON")->required();
  verify->add_option("--scenario", scenario_path, "scenario supplying the cost table");
  verify->add_option("--kappa", common.kappa, "override kappa")->check(CLI::PositiveNumber);
  verify->add_option("--rounds", desired_rounds, "desired round count for the kappa guide");
  verify->add_option("--gap", target_gap, "target optimality gap for the kappa guide");

  auto* genc = app.add_subcommand("gen-scenario", "emit a generated CTOP instance");
  add_common(genc);
  add_generator_flags(genc, gen);

  auto* base = app.add_subcommand("baselines", "run centralized, first-come and voting baselines");
  add_common(base);
  base->add_option("scenario", scenario_path, "scenario JSON")->required();
  base->add_option("--solver", solver_kind, "exhaustive or local-search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      return cmd_run(common, scenario_path, reserves, parse_solver(solver_kind, restarts, moves));
    }
    if (*mc) {
      std::optional<std::uint64_t> seed;
      if (mc->count("--seed") > 0) seed = common.seed;
      return cmd_montecarlo(common, seed, trials, mode);
    }
    if (*verify) return cmd_verify(common, record_path, scenario_path, desired_rounds, target_gap);
    if (*genc) return cmd_gen(common, gen);
    if (*base) return cmd_baselines(common, scenario_path, parse_solver(solver_kind, restarts, moves));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
