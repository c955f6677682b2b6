#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "nego/coordination.hpp"
#include "nego/model.hpp"
#include "nego/types.hpp"

namespace nego {

enum class SolverKind { kExhaustive, kLocalSearch };

struct SolverConfig {
  SolverKind kind = SolverKind::kExhaustive;
  int restarts = 20;
  int moves = 1000;  // improving moves allowed per restart
  std::uint64_t seed = 0;
  std::uint64_t exhaustive_limit = 1'000'000;
};

SolverKind solver_kind_from_string(const std::string& name);
std::string to_string(SolverKind kind);

struct Minimum {
  ChoiceId choice;
  double value = 0.0;
};

class SearchSpaceTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

using Objective = std::function<double(ChoiceId)>;

/// Exact global minimum over choices [0, m); ties go to the lowest index.
Minimum exhaustive_min(const Objective& objective, std::uint64_t choices);

/// Random-restart first-improvement search over single-component moves.
/// Restarts are reduced by (value, index) so the result does not depend on
/// evaluation order.
Minimum local_search_min(const Objective& objective, const BundleSpace& space, const SolverConfig& config);

/// Dispatches on config.kind; exhaustive throws SearchSpaceTooLarge above
/// config.exhaustive_limit.
Minimum minimize(const Objective& objective, const BundleSpace& space, const SolverConfig& config);

/// Agent's candidate: a minimizer of its normalized effective cost. Each agent
/// searches with its own seed derived from (config.seed, agent, round).
ChoiceId generate_candidate(std::size_t agent, const CoordinationState& state, const Scenario& scenario,
                            const SolverConfig& config);

}  // namespace nego
