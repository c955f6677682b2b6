#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nego/candidates.hpp"
#include "nego/model.hpp"

namespace nego::baselines {

enum class Mechanism { kOversight, kCentralized, kFcfs, kVoting };

std::string to_string(Mechanism mechanism);  // oversight, c-ctop, f-ctop, voting
Mechanism mechanism_from_string(const std::string& name);

struct BaselineResult {
  Mechanism mechanism = Mechanism::kCentralized;
  ChoiceId choice;
  std::vector<std::size_t> bundle;  // empty for explicit-table scenarios
  double system_cost = 0.0;
  std::vector<double> agent_costs;
  double gini = 0.0;
};

/// Minimizes Σ_i J_i^ind(o) with the configured solver.
BaselineResult centralized_ctop(const Scenario& scenario, const SolverConfig& solver = {});

/// Flights in ascending departure (ties by index); each takes the option with
/// the lowest system cost over the flights fixed so far plus itself. Throws
/// std::invalid_argument for non-CTOP scenarios.
BaselineResult fcfs_ctop(const Scenario& scenario);

/// Agents propose uncoordinated candidates (w = 0), vote for their cheapest
/// pool member, plurality wins and ties are drawn uniformly with `seed`.
BaselineResult voting(const Scenario& scenario, std::uint64_t seed, const SolverConfig& solver = {});

}  // namespace nego::baselines
