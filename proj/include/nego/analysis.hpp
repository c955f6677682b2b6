#pragma once

// Analytical quantities: cost spread B_max, round and optimality-gap bounds,
// κ guides, system metrics, and per-run bound verification.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nego/oversight.hpp"
#include "nego/types.hpp"

namespace nego::analysis {

struct CostSpread {
  double b_max = 0.0;
  std::vector<double> per_agent;  // B_i
};

/// B_i = max_{o,o'} |J_i(o) - J_i(o')| over the whole table.
CostSpread b_max(const CostTable& table);

/// ⌈κ B_max⌉, at least 1.
std::size_t round_bound(double kappa, double b_max);

/// r_des / B_max; +infinity when B_max == 0.
double kappa_for_rounds(std::size_t desired_rounds, double b_max);

/// n (B_max δ + B_max / α).
double gap_bound(std::size_t agents, double b_max, double delta, double alpha);

class InfeasibleTarget : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// (1/B_max) ⌊n B_max / (τ - 2(n-1) B_max)⌋. Throws InfeasibleTarget when
/// τ ≤ 2(n-1) B_max. Returns 0 when B_max == 0.
double kappa_for_gap(std::size_t agents, double b_max, double target_gap);

/// 2(1 - 1/n).
double sigma_max(std::size_t agents);

/// ‖w̄ - u‖₁ for an already-normalized weight vector.
double misalignment(std::span<const double> normalized);

/// ‖w/(‖w‖₁+1) - u‖₁.
double delta_misalignment(std::span<const double> weights);

double system_cost(const CostTable& table, ChoiceId choice);

struct Optimum {
  ChoiceId choice;
  double value = 0.0;
};

/// Brute-force minimizer of J_sys, ties to the lowest index.
Optimum system_optimum(const CostTable& table);

struct SelectionError {
  double eta = 0.0;
  ChoiceId reference;  // o†
};

/// η = S_w̄(chosen) - min_o S_w̄(o) with w̄ = w/(‖w‖₁+1).
SelectionError selection_error(std::span<const double> weights, const CostTable& table, ChoiceId chosen);

/// Σ|x_i - x_j| / (2 n² mean). Inputs with a negative entry are first shifted
/// so their minimum is zero. Returns 0 when the mean is zero.
double gini(std::span<const double> costs);
bool gini_needs_shift(std::span<const double> costs);

/// Spread of agent's effective cost over a candidate pool.
double effective_spread(std::span<const double> weights, double alpha, std::size_t agent, const CostTable& table,
                        std::span<const ChoiceId> pool);

struct RoundBounds {
  std::size_t round = 0;
  double alpha = 1.0;
  double delta = 0.0;
  double eta = 0.0;
  ChoiceId reference;
  double eta_bound = 0.0;       // B_max / α
  double gap = 0.0;             // J_sys(o_r) - J_sys(o_opt)
  double gap_bound = 0.0;       // n (B_max δ + B_max / α)
  double max_spread = 0.0;      // max over agents of effective-cost spread on the pool
  double max_payer_value = 0.0; // max over payers of b_j e_j
  double payer_bound = 0.0;     // B_max / α + one trading quantum of the worst payer
};

struct GuideTargets {
  std::optional<std::size_t> desired_rounds;
  std::optional<double> target_gap;
};

struct BoundReport {
  double b_max = 0.0;
  std::vector<double> per_agent;
  std::size_t agents = 0;
  std::vector<RoundBounds> rounds;
  std::size_t round_bound = 1;
  std::size_t r_term = 0;
  bool gap_checked = true;  // false when the optimum could not be enumerated
  double gap = 0.0;
  double gap_bound = 0.0;
  double sigma_max = 0.0;
  double delta_bar = 0.0;
  double max_conservation_residual = 0.0;
  double kappa_max_for_rounds = 0.0;
  std::optional<double> kappa_min_for_gap;

  std::size_t termination_violations = 0;
  std::size_t gap_violations = 0;
  std::size_t selection_violations = 0;
  std::size_t flattening_violations = 0;
  std::size_t payer_violations = 0;
  std::size_t delta_violations = 0;
  std::size_t feasibility_violations = 0;
  std::size_t conservation_violations = 0;

  bool any_violation() const;
  /// One printable line per check.
  struct Line {
    std::string name;
    bool ok;
    std::string detail;
  };
  std::vector<Line> lines() const;
};

/// Recomputes every bound from the record and the full cost table.
BoundReport verify_bounds(const RunRecord& record, const CostTable& table, double kappa,
                          const GuideTargets& targets = {});

std::string to_json_string(const BoundReport& report);

}  // namespace nego::analysis
