#include "nego/baselines.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "nego/analysis.hpp"
#include "nego/coordination.hpp"
#include "nego/rng.hpp"

namespace nego::baselines {

std::string to_string(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kOversight:
      return "oversight";
    case Mechanism::kCentralized:
      return "c-ctop";
    case Mechanism::kFcfs:
      return "f-ctop";
    case Mechanism::kVoting:
      return "voting";
  }
  return "unknown";
}

Mechanism mechanism_from_string(const std::string& name) {
  if (name == "oversight") return Mechanism::kOversight;
  if (name == "c-ctop") return Mechanism::kCentralized;
  if (name == "f-ctop") return Mechanism::kFcfs;
  if (name == "voting") return Mechanism::kVoting;
  throw std::invalid_argument("unknown mechanism '" + name + "'");
}

namespace {

void require_valid(const Scenario& scenario) {
  if (const auto problems = validate_scenario(scenario); !problems.empty()) {
    throw std::invalid_argument("invalid scenario: " + problems.front());
  }
}

BaselineResult finish(const Scenario& scenario, Mechanism mechanism, ChoiceId choice) {
  BaselineResult out;
  out.mechanism = mechanism;
  out.choice = choice;
  if (scenario.is_ctop()) out.bundle = scenario.space().decode(choice);
  for (std::size_t a = 0; a < scenario.agents(); ++a) out.agent_costs.push_back(scenario.cost(a, choice));
  out.system_cost = std::accumulate(out.agent_costs.begin(), out.agent_costs.end(), 0.0);
  out.gini = analysis::gini(out.agent_costs);
  return out;
}

}  // namespace

BaselineResult centralized_ctop(const Scenario& scenario, const SolverConfig& solver) {
  require_valid(scenario);
  const CostTable* table = scenario.table();
  const Objective objective = [&](ChoiceId c) {
    if (table != nullptr) {
      const auto row = table->row(c);
      return std::accumulate(row.begin(), row.end(), 0.0);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < scenario.agents(); ++a) total += scenario.cost(a, c);
    return total;
  };
  return finish(scenario, Mechanism::kCentralized, minimize(objective, scenario.space(), solver).choice);
}

BaselineResult fcfs_ctop(const Scenario& scenario) {
  const ctop::CtopInstance* inst = scenario.ctop();
  if (inst == nullptr) throw std::invalid_argument("fcfs_ctop: scenario has no flight structure");
  require_valid(scenario);
  std::vector<std::size_t> order(inst->flights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return inst->flights[a].departure < inst->flights[b].departure;
  });
  ctop::Bundle bundle(inst->flights.size(), ctop::kExcluded);
  for (std::size_t f : order) {
    double best = 0.0;
    std::size_t best_option = 0;
    for (std::size_t o = 0; o < inst->flights[f].options.size(); ++o) {
      bundle[f] = o;
      double total = 0.0;
      for (std::size_t s = 0; s < inst->sectors.size(); ++s) total += ctop::sector_cost(*inst, s, bundle);
      if (o == 0 || total < best) {
        best = total;
        best_option = o;
      }
    }
    bundle[f] = best_option;
  }
  return finish(scenario, Mechanism::kFcfs, scenario.space().encode(bundle));
}

BaselineResult voting(const Scenario& scenario, std::uint64_t seed, const SolverConfig& solver) {
  require_valid(scenario);
  const std::size_t n = scenario.agents();
  SolverConfig config = solver;
  config.seed = seed;
  const CoordinationState uncoordinated(n);
  std::vector<ChoiceId> pool;
  for (std::size_t a = 0; a < n; ++a) pool.push_back(generate_candidate(a, uncoordinated, scenario, config));
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::map<ChoiceId, std::size_t> votes;
  for (std::size_t a = 0; a < n; ++a) {
    ChoiceId pick = pool.front();
    for (ChoiceId c : pool) {
      if (scenario.cost(a, c) < scenario.cost(a, pick)) pick = c;
    }
    ++votes[pick];
  }
  std::size_t top = 0;
  for (const auto& [choice, count] : votes) top = std::max(top, count);
  std::vector<ChoiceId> leaders;
  for (const auto& [choice, count] : votes) {
    if (count == top) leaders.push_back(choice);
  }
  Rng rng(derive_seed(seed, {0x766f7465ULL}));
  return finish(scenario, Mechanism::kVoting, leaders[rng.below(leaders.size())]);
}

}  // namespace nego::baselines
