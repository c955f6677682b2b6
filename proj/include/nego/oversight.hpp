#pragma once

// Outer loop: candidate generation, TACo negotiation on effective costs,
// shortfall evaluation, and coordination-factor update until every agent's
// expenditure fits its reserve.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nego/candidates.hpp"
#include "nego/coordination.hpp"
#include "nego/model.hpp"
#include "nego/taco.hpp"

namespace nego {

/// b_i = 1/(κ R_i). Throws std::invalid_argument for nonpositive inputs.
double asset_valuation(double kappa, double reserve);

/// s_i = max(0, e_i - R_i) / R_i.
double shortfall(double expenditure, double reserve);

struct OversightParams {
  double kappa = 1.0;
  taco::TacoParams taco;
  // When set, ε is this factor times B_max (floored at 1e-12) instead of taco.indifference.
  std::optional<double> indifference_per_bmax = 1e-3;
  SolverConfig solver;
  // Defaults to max(⌈κ B_max⌉ + 2, 10).
  std::optional<std::size_t> max_rounds;
};

struct RoundEntry {
  std::size_t round = 0;
  std::vector<double> weights;  // w^(r) used to generate this round's candidates
  double alpha = 1.0;
  std::vector<ChoiceId> candidates;  // one per agent
  std::vector<ChoiceId> pool;        // sorted, deduplicated union
  ChoiceId agreed;
  std::vector<double> expenditures;
  std::vector<long> unit_counts;
  std::vector<std::size_t> payers;
  std::size_t taco_steps = 0;
  std::size_t taco_reductions = 0;
  double final_unit = 0.0;
  double conservation_residual = 0.0;
  bool indifference = false;
  std::vector<double> shortfalls;
  std::vector<double> normalized_shortfalls;  // empty on the terminal round
  double total_shortfall = 0.0;
  double system_cost = 0.0;
  double gini = 0.0;
  std::vector<double> agent_costs;  // J^ind at the agreed choice
};

struct RunRecord {
  double kappa = 0.0;
  Reserves reserves;
  std::vector<double> valuations;
  double b_max = 0.0;
  std::size_t round_bound = 1;
  std::size_t r_term = 0;
  ChoiceId agreed;
  bool completed = false;
  std::vector<RoundEntry> rounds;
  std::optional<CostTable> table;  // attached when the choice space is enumerable
};

class OversightCapError : public std::runtime_error {
 public:
  OversightCapError(const std::string& what, RunRecord partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RunRecord& partial() const { return partial_; }

 private:
  RunRecord partial_;
};

/// Algorithm loop. Throws OversightCapError (carrying the partial record) if
/// the round cap is reached; taco::SafetyCapError propagates unchanged.
RunRecord run_oversight(const Scenario& scenario, const Reserves& reserves, const OversightParams& params,
                        std::uint64_t seed);

std::string to_json_string(const RunRecord& record);
RunRecord run_record_from_json_string(const std::string& text);

/// One row per round: run_id, round, kappa, alpha, total_shortfall,
/// system_cost, gini, agreed_choice, r_bound.
std::string csv_header_rounds();
std::string to_csv_rows(const RunRecord& record, const std::string& run_id);

}  // namespace nego
