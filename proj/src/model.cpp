#include "nego/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nego {

using json = nlohmann::json;

Scenario Scenario::from_table(CostTable table, std::vector<std::string> labels) {
  Scenario s;
  s.agents_ = table.agents();
  s.choices_ = table.choices();
  s.space_ = BundleSpace(std::vector<std::size_t>{std::max<std::size_t>(table.choices(), 1)});
  s.table_ = std::make_shared<const CostTable>(std::move(table));
  s.labels_ = std::move(labels);
  return s;
}

Scenario Scenario::from_ctop(ctop::CtopInstance instance) {
  Scenario s;
  s.agents_ = instance.sectors.size();
  s.ctop_ = std::make_shared<const ctop::CtopInstance>(std::move(instance));
  const ctop::CtopInstance& inst = *s.ctop_;
  if (inst.option_count() == 0 || !ctop::check_instance(inst).empty()) {
    // Left unmaterialized; validate_scenario reports the problem.
    return s;
  }
  s.space_ = inst.bundle_space();
  s.choices_ = s.space_.size();
  if (s.choices_ <= kMaterializeLimit) {
    auto table = std::make_shared<CostTable>(static_cast<std::size_t>(s.choices_), s.agents_);
    for (std::size_t c = 0; c < s.choices_; ++c) {
      const auto bundle = s.space_.decode(ChoiceId{c});
      for (std::size_t a = 0; a < s.agents_; ++a) (*table)(ChoiceId{c}, a) = ctop::sector_cost(inst, a, bundle);
    }
    s.table_ = std::move(table);
  }
  for (std::size_t a = 0; a < s.agents_; ++a) s.labels_.push_back("sector-" + std::to_string(a));
  return s;
}

const CostTable& Scenario::require_table() const {
  if (!table_) {
    throw std::length_error("choice space of " + std::to_string(choices_) +
                            " choices is too large to enumerate; use local search");
  }
  return *table_;
}

double Scenario::cost(std::size_t agent, ChoiceId choice) const {
  if (table_) return (*table_)(choice, agent);
  return ctop::sector_cost(*ctop_, agent, space_.decode(choice));
}

double individual_cost(const Scenario& scenario, std::size_t agent, ChoiceId choice) {
  if (agent >= scenario.agents()) {
    throw std::out_of_range("agent " + std::to_string(agent) + " out of range [0, " +
                            std::to_string(scenario.agents()) + ")");
  }
  if (choice.index >= scenario.choices()) {
    throw std::out_of_range("choice " + std::to_string(choice.index) + " out of range [0, " +
                            std::to_string(scenario.choices()) + ")");
  }
  return scenario.cost(agent, choice);
}

std::vector<std::string> validate_scenario(const Scenario& scenario) {
  std::vector<std::string> report;
  if (scenario.agents() == 0) report.emplace_back("empty agent set");
  if (const auto* inst = scenario.ctop()) {
    if (std::string problem = ctop::check_instance(*inst); !problem.empty()) report.push_back(std::move(problem));
    if (inst->flights.empty()) report.emplace_back("empty choice set: no flights");
    return report;
  }
  const CostTable* table = scenario.table();
  if (table == nullptr || table->choices() == 0) {
    report.emplace_back("empty choice set");
    return report;
  }
  for (std::size_t c = 0; c < table->choices(); ++c) {
    for (std::size_t a = 0; a < table->agents(); ++a) {
      if (!std::isfinite((*table)(ChoiceId{c}, a))) {
        report.push_back("non-finite cost at (row " + std::to_string(c) + ", col " + std::to_string(a) + ")");
      }
    }
  }
  if (!scenario.labels().empty() && scenario.labels().size() != scenario.agents()) {
    report.push_back("dimension mismatch: " + std::to_string(scenario.labels().size()) + " labels for " +
                     std::to_string(scenario.agents()) + " agents");
  }
  return report;
}

void check_reserves(std::span<const double> reserves, std::size_t agents) {
  if (reserves.size() != agents) {
    throw std::invalid_argument("expected " + std::to_string(agents) + " reserves, got " +
                                std::to_string(reserves.size()));
  }
  for (std::size_t i = 0; i < reserves.size(); ++i) {
    if (!(reserves[i] > 0.0) || !std::isfinite(reserves[i])) {
      throw std::invalid_argument("reserve of agent " + std::to_string(i) + " must be positive and finite");
    }
  }
}

Scenario scenario_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ctop::SchemaError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (j.contains("flights") || j.contains("sectors")) return Scenario::from_ctop(ctop::from_json_string(text));
  for (const char* key : {"agents", "choices", "costs"}) {
    if (!j.contains(key)) throw ctop::SchemaError(std::string("scenario: missing '") + key + "'");
  }
  if (!j["agents"].is_number_integer() || !j["choices"].is_number_integer()) {
    throw ctop::SchemaError("scenario: 'agents' and 'choices' must be integers");
  }
  const auto agents = j["agents"].get<std::size_t>();
  const auto choices = j["choices"].get<std::size_t>();
  const json& costs = j["costs"];
  if (!costs.is_array() || costs.size() != choices) {
    throw ctop::SchemaError("scenario.costs: expected " + std::to_string(choices) + " rows");
  }
  std::vector<double> values;
  values.reserve(choices * agents);
  for (std::size_t r = 0; r < choices; ++r) {
    if (!costs[r].is_array() || costs[r].size() != agents) {
      throw ctop::SchemaError("scenario.costs[" + std::to_string(r) + "]: expected " + std::to_string(agents) +
                              " entries");
    }
    for (std::size_t c = 0; c < agents; ++c) {
      const json& v = costs[r][c];
      // Non-finite costs are written as null or strings; they survive loading
      // so validate_scenario can report them.
      if (v.is_number()) {
        values.push_back(v.get<double>());
      } else if (v.is_null() || v.is_string()) {
        values.push_back(std::nan(""));
      } else {
        throw ctop::SchemaError("scenario.costs[" + std::to_string(r) + "][" + std::to_string(c) +
                                "]: expected a number");
      }
    }
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
  return Scenario::from_table(CostTable(choices, agents, std::move(values)), std::move(labels));
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return scenario_from_json_string(buffer.str());
  } catch (const ctop::SchemaError& e) {
    throw ctop::SchemaError(path.string() + ": " + e.what());
  }
}

std::string table_to_json_string(const CostTable& table) {
  json rows = json::array();
  for (std::size_t c = 0; c < table.choices(); ++c) {
    json row = json::array();
    for (double v : table.row(ChoiceId{c})) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return json{{"agents", table.agents()}, {"choices", table.choices()}, {"costs", std::move(rows)}}.dump();
}

}  // namespace nego
