#include "nego/oversight.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "nego/analysis.hpp"

namespace nego {

using json = nlohmann::json;

double asset_valuation(double kappa, double reserve) {
  if (!(kappa > 0.0)) throw std::invalid_argument("asset_valuation: kappa must be positive");
  if (!(reserve > 0.0)) throw std::invalid_argument("asset_valuation: reserve must be positive");
  return 1.0 / (kappa * reserve);
}

double shortfall(double expenditure, double reserve) {
  if (!(reserve > 0.0)) throw std::invalid_argument("shortfall: reserve must be positive");
  return std::max(0.0, expenditure - reserve) / reserve;
}

namespace {

std::vector<double> cost_vector(const Scenario& scenario, ChoiceId c) {
  std::vector<double> out(scenario.agents());
  if (const CostTable* table = scenario.table()) {
    const auto row = table->row(c);
    std::copy(row.begin(), row.end(), out.begin());
  } else {
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = scenario.cost(a, c);
  }
  return out;
}

}  // namespace

RunRecord run_oversight(const Scenario& scenario, const Reserves& reserves, const OversightParams& params,
                        std::uint64_t seed) {
  if (const auto problems = validate_scenario(scenario); !problems.empty()) {
    throw std::invalid_argument("invalid scenario: " + problems.front());
  }
  check_reserves(reserves, scenario.agents());
  if (!(params.kappa > 0.0) || !std::isfinite(params.kappa)) {
    throw std::invalid_argument("run_oversight: kappa must be positive and finite");
  }
  params.taco.validate();

  const std::size_t n = scenario.agents();
  RunRecord record;
  record.kappa = params.kappa;
  record.reserves = reserves;
  for (double r : reserves) record.valuations.push_back(asset_valuation(params.kappa, r));
  if (const CostTable* table = scenario.table()) {
    record.table = *table;
    record.b_max = analysis::b_max(*table).b_max;
  }
  record.round_bound = analysis::round_bound(params.kappa, record.b_max);
  const std::size_t cap = params.max_rounds.value_or(std::max<std::size_t>(record.round_bound + 2, 10));

  taco::TacoParams taco_params = params.taco;
  if (params.indifference_per_bmax && scenario.table() != nullptr) {
    taco_params.indifference = std::max(1e-12, *params.indifference_per_bmax * record.b_max);
  }

  SolverConfig solver = params.solver;
  solver.seed = seed;
  CoordinationState state(n);

  while (true) {
    RoundEntry entry;
    entry.round = state.round();
    entry.weights = state.weights();
    entry.alpha = state.alpha();
    for (std::size_t a = 0; a < n; ++a) entry.candidates.push_back(generate_candidate(a, state, scenario, solver));
    entry.pool = entry.candidates;
    std::sort(entry.pool.begin(), entry.pool.end());
    entry.pool.erase(std::unique(entry.pool.begin(), entry.pool.end()), entry.pool.end());

    std::vector<std::vector<double>> pool_costs;
    for (ChoiceId c : entry.pool) pool_costs.push_back(cost_vector(scenario, c));
    const taco::CostLookup lookup = [&](std::size_t agent, ChoiceId c) {
      const auto it = std::lower_bound(entry.pool.begin(), entry.pool.end(), c);
      return effective_cost(state, agent, pool_costs[static_cast<std::size_t>(it - entry.pool.begin())]);
    };
    const taco::NegotiationOutcome outcome = taco::run_taco(entry.pool, lookup, record.valuations, taco_params);

    entry.agreed = outcome.agreed;
    entry.expenditures = outcome.expenditures;
    entry.unit_counts = outcome.unit_counts;
    entry.payers = outcome.payers;
    entry.taco_steps = outcome.steps;
    entry.taco_reductions = outcome.reductions;
    entry.final_unit = outcome.final_unit;
    entry.conservation_residual = outcome.max_conservation_residual;
    entry.indifference = outcome.terminated_by == taco::Termination::kIndifference;
    entry.agent_costs = cost_vector(scenario, outcome.agreed);
    entry.system_cost = std::accumulate(entry.agent_costs.begin(), entry.agent_costs.end(), 0.0);
    entry.gini = analysis::gini(entry.agent_costs);
    for (std::size_t i = 0; i < n; ++i) entry.shortfalls.push_back(shortfall(entry.expenditures[i], reserves[i]));
    entry.total_shortfall = std::accumulate(entry.shortfalls.begin(), entry.shortfalls.end(), 0.0);

    const bool done = entry.total_shortfall == 0.0;
    if (!done) {
      for (double s : entry.shortfalls) entry.normalized_shortfalls.push_back(s / entry.total_shortfall);
    }
    record.rounds.push_back(std::move(entry));
    record.r_term = record.rounds.size();
    record.agreed = record.rounds.back().agreed;
    if (done) {
      record.completed = true;
      return record;
    }
    if (record.rounds.size() >= cap) {
      throw OversightCapError("oversight exceeded " + std::to_string(cap) + " rounds", std::move(record));
    }
    state = state.updated(record.rounds.back().shortfalls);
  }
}

namespace {

std::vector<std::size_t> indices(const std::vector<ChoiceId>& ids) {
  std::vector<std::size_t> out;
  for (ChoiceId c : ids) out.push_back(c.index);
  return out;
}

std::vector<ChoiceId> choice_ids(const json& j) {
  std::vector<ChoiceId> out;
  for (const json& v : j) out.push_back(ChoiceId{v.get<std::size_t>()});
  return out;
}

json round_to_json(const RoundEntry& e) {
  return json{{"round", e.round},
              {"weights", e.weights},
              {"alpha", e.alpha},
              {"candidates", indices(e.candidates)},
              {"pool", indices(e.pool)},
              {"agreed", e.agreed.index},
              {"expenditures", e.expenditures},
              {"unit_counts", e.unit_counts},
              {"payers", e.payers},
              {"taco_steps", e.taco_steps},
              {"taco_reductions", e.taco_reductions},
              {"final_unit", e.final_unit},
              {"conservation_residual", e.conservation_residual},
              {"indifference", e.indifference},
              {"shortfalls", e.shortfalls},
              {"normalized_shortfalls", e.normalized_shortfalls},
              {"total_shortfall", e.total_shortfall},
              {"system_cost", e.system_cost},
              {"gini", e.gini},
              {"agent_costs", e.agent_costs}};
}

RoundEntry round_from_json(const json& j) {
  RoundEntry e;
  e.round = j.at("round").get<std::size_t>();
  e.weights = j.at("weights").get<std::vector<double>>();
  e.alpha = j.at("alpha").get<double>();
  e.candidates = choice_ids(j.at("candidates"));
  e.pool = choice_ids(j.at("pool"));
  e.agreed = ChoiceId{j.at("agreed").get<std::size_t>()};
  e.expenditures = j.at("expenditures").get<std::vector<double>>();
  e.unit_counts = j.at("unit_counts").get<std::vector<long>>();
  e.payers = j.at("payers").get<std::vector<std::size_t>>();
  e.taco_steps = j.at("taco_steps").get<std::size_t>();
  e.taco_reductions = j.at("taco_reductions").get<std::size_t>();
  e.final_unit = j.at("final_unit").get<double>();
  e.conservation_residual = j.at("conservation_residual").get<double>();
  e.indifference = j.at("indifference").get<bool>();
  e.shortfalls = j.at("shortfalls").get<std::vector<double>>();
  e.normalized_shortfalls = j.at("normalized_shortfalls").get<std::vector<double>>();
  e.total_shortfall = j.at("total_shortfall").get<double>();
  e.system_cost = j.at("system_cost").get<double>();
  e.gini = j.at("gini").get<double>();
  e.agent_costs = j.at("agent_costs").get<std::vector<double>>();
  return e;
}

}  // namespace

std::string to_json_string(const RunRecord& record) {
  json rounds = json::array();
  for (const RoundEntry& e : record.rounds) rounds.push_back(round_to_json(e));
  json j{{"kappa", record.kappa},
         {"reserves", record.reserves},
         {"valuations", record.valuations},
         {"b_max", record.b_max},
         {"round_bound", record.round_bound},
         {"r_term", record.r_term},
         {"agreed", record.agreed.index},
         {"completed", record.completed},
         {"rounds", std::move(rounds)}};
  if (record.table) j["table"] = json::parse(table_to_json_string(*record.table));
  return j.dump(1);
}

RunRecord run_record_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ctop::SchemaError(std::string("run record: invalid JSON: ") + e.what());
  }
  RunRecord r;
  try {
    r.kappa = j.at("kappa").get<double>();
    r.reserves = j.at("reserves").get<std::vector<double>>();
    r.valuations = j.at("valuations").get<std::vector<double>>();
    r.b_max = j.at("b_max").get<double>();
    r.round_bound = j.at("round_bound").get<std::size_t>();
    r.r_term = j.at("r_term").get<std::size_t>();
    r.agreed = ChoiceId{j.at("agreed").get<std::size_t>()};
    r.completed = j.at("completed").get<bool>();
    for (const json& e : j.at("rounds")) r.rounds.push_back(round_from_json(e));
  } catch (const json::exception& e) {
    throw ctop::SchemaError(std::string("run record: ") + e.what());
  }
  if (j.contains("table")) {
    const Scenario s = scenario_from_json_string(j["table"].dump());
    r.table = s.require_table();
  }
  return r;
}

std::string csv_header_rounds() { return "run_id,round,kappa,alpha,total_shortfall,system_cost,gini,agreed_choice,r_bound\n"; }

std::string to_csv_rows(const RunRecord& record, const std::string& run_id) {
  std::string out;
  char buf[512];
  for (const RoundEntry& e : record.rounds) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu\n", run_id.c_str(), e.round,
                  record.kappa, e.alpha, e.total_shortfall, e.system_cost, e.gini, e.agreed.index, record.round_bound);
    out += buf;
  }
  return out;
}

}  // namespace nego
