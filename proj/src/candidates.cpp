#include "nego/candidates.hpp"

#include <algorithm>
#include <optional>
#include <vector>

#include "nego/rng.hpp"

namespace nego {

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "exhaustive") return SolverKind::kExhaustive;
  if (name == "local-search" || name == "local_search") return SolverKind::kLocalSearch;
  throw std::invalid_argument("unknown solver kind '" + name + "' (expected exhaustive or local-search)");
}

std::string to_string(SolverKind kind) { return kind == SolverKind::kExhaustive ? "exhaustive" : "local-search"; }

Minimum exhaustive_min(const Objective& objective, std::uint64_t choices) {
  if (choices == 0) throw std::invalid_argument("exhaustive_min: empty choice set");
  Minimum best{ChoiceId{0}, objective(ChoiceId{0})};
  for (std::uint64_t c = 1; c < choices; ++c) {
    const double v = objective(ChoiceId{static_cast<std::size_t>(c)});
    if (v < best.value) best = {ChoiceId{static_cast<std::size_t>(c)}, v};
  }
  return best;
}

Minimum local_search_min(const Objective& objective, const BundleSpace& space, const SolverConfig& config) {
  const auto& radices = space.radices();
  if (radices.empty()) throw std::invalid_argument("local_search_min: empty bundle space");
  const int restarts = std::max(1, config.restarts);
  std::optional<Minimum> best;
  std::vector<std::size_t> digits(radices.size());
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(r)}));
    for (std::size_t k = 0; k < radices.size(); ++k) digits[k] = static_cast<std::size_t>(rng.below(radices[k]));
    ChoiceId current = space.encode(digits);
    double value = objective(current);
    int moves = 0;
    bool improved = true;
    while (improved && moves < config.moves) {
      improved = false;
      for (std::size_t k = 0; k < radices.size() && !improved; ++k) {
        const std::size_t keep = digits[k];
        for (std::size_t o = 0; o < radices[k] && !improved; ++o) {
          if (o == keep) continue;
          digits[k] = o;
          const ChoiceId next = space.encode(digits);
          const double v = objective(next);
          if (v < value) {
            value = v;
            current = next;
            improved = true;
            ++moves;
          }
        }
        if (!improved) digits[k] = keep;
      }
    }
    if (!best || value < best->value || (value == best->value && current < best->choice)) {
      best = Minimum{current, value};
    }
  }
  return *best;
}

Minimum minimize(const Objective& objective, const BundleSpace& space, const SolverConfig& config) {
  if (config.kind == SolverKind::kLocalSearch) return local_search_min(objective, space, config);
  const std::uint64_t size = space.size();
  if (size > config.exhaustive_limit) {
    throw SearchSpaceTooLarge("exhaustive search over " + std::to_string(size) + " choices exceeds the limit of " +
                              std::to_string(config.exhaustive_limit) + "; use local-search");
  }
  return exhaustive_min(objective, size);
}

ChoiceId generate_candidate(std::size_t agent, const CoordinationState& state, const Scenario& scenario,
                            const SolverConfig& config) {
  if (agent >= scenario.agents()) throw std::out_of_range("generate_candidate: agent out of range");
  if (state.agents() != scenario.agents()) throw std::invalid_argument("generate_candidate: state/scenario mismatch");
  SolverConfig local = config;
  local.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(agent), state.round()});
  std::vector<double> costs(scenario.agents());
  const Objective objective = [&](ChoiceId c) {
    if (const CostTable* table = scenario.table()) return effective_cost(state, agent, table->row(c));
    for (std::size_t a = 0; a < costs.size(); ++a) costs[a] = scenario.cost(a, c);
    return effective_cost(state, agent, costs);
  };
  return minimize(objective, scenario.space(), local).choice;
}

}  // namespace nego
