#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nego/analysis.hpp"
#include "nego/baselines.hpp"
#include "nego/ctop.hpp"
#include "nego/harness.hpp"
#include "nego/model.hpp"
#include "nego/oversight.hpp"
#include "nego/taco.hpp"

namespace py = pybind11;
using namespace nego;

namespace {

std::vector<std::vector<double>> table_rows(const CostTable& table) {
  std::vector<std::vector<double>> rows(table.choices(), std::vector<double>(table.agents()));
  for (std::size_t c = 0; c < table.choices(); ++c) {
    for (std::size_t a = 0; a < table.agents(); ++a) rows[c][a] = table(ChoiceId{c}, a);
  }
  return rows;
}

SolverConfig make_solver(const std::string& solver, int restarts, int moves, std::uint64_t seed) {
  SolverConfig config;
  config.kind = solver_kind_from_string(solver);
  config.restarts = restarts;
  config.moves = moves;
  config.seed = seed;
  return config;
}

py::dict baseline_dict(const baselines::BaselineResult& r) {
  py::dict d;
  d["mechanism"] = baselines::to_string(r.mechanism);
  d["choice"] = r.choice.index;
  d["bundle"] = r.bundle;
  d["system_cost"] = r.system_cost;
  d["agent_costs"] = r.agent_costs;
  d["gini"] = r.gini;
  return d;
}

}  // namespace

PYBIND11_MODULE(_nego, m) {
  m.doc() = "Decentralized negotiation with a centralized oversight loop";

  py::register_exception<ctop::SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<analysis::InfeasibleTarget>(m, "InfeasibleTarget", PyExc_ValueError);
  py::register_exception<taco::SafetyCapError>(m, "SafetyCapError", PyExc_RuntimeError);
  py::register_exception<OversightCapError>(m, "OversightCapError", PyExc_RuntimeError);

  py::class_<Scenario>(m, "Scenario")
      .def_static(
          "from_table",
          [](const std::vector<std::vector<double>>& rows) { return Scenario::from_table(CostTable::from_rows(rows)); },
          py::arg("rows"), "Rows are choices, columns are agents.")
      .def_static("from_json", &scenario_from_json_string, py::arg("text"))
      .def_static(
          "load", [](const std::string& path) { return load_scenario(path); }, py::arg("path"))
      .def_property_readonly("agents", &Scenario::agents)
      .def_property_readonly("choices", &Scenario::choices)
      .def_property_readonly("is_ctop", &Scenario::is_ctop)
      .def(
          "cost",
          [](const Scenario& s, std::size_t agent, std::uint64_t choice) {
            return individual_cost(s, agent, ChoiceId{choice});
          },
          py::arg("agent"), py::arg("choice"))
      .def("table",
           [](const Scenario& s) -> std::optional<std::vector<std::vector<double>>> {
             if (s.table() == nullptr) return std::nullopt;
             return table_rows(*s.table());
           })
      .def("validate", [](const Scenario& s) { return validate_scenario(s); })
      .def("__repr__", [](const Scenario& s) {
        return "<Scenario agents=" + std::to_string(s.agents()) + " choices=" + std::to_string(s.choices()) +
               (s.is_ctop() ? " ctop>" : ">");
      });

  m.def(
      "generate_scenario",
      [](std::size_t sectors, std::size_t flights, std::size_t options, int grid, int horizon, std::uint64_t seed) {
        return ctop::to_json_string(ctop::generate_scenario({sectors, flights, options, grid, horizon}, seed));
      },
      py::arg("sectors") = 3, py::arg("flights") = 5, py::arg("options") = 3, py::arg("grid") = 4,
      py::arg("horizon") = 8, py::arg("seed") = 0, "CTOP instance as JSON text.");

  m.def(
      "run_taco",
      [](const std::vector<std::vector<double>>& costs, const std::vector<double>& valuations, double initial_unit,
         double reduction, double indifference, std::size_t max_steps) {
        if (costs.empty()) throw std::invalid_argument("run_taco: no agents");
        const std::size_t options = costs[0].size();
        for (const auto& row : costs) {
          if (row.size() != options) throw std::invalid_argument("run_taco: ragged cost rows");
        }
        std::vector<ChoiceId> choices(options);
        for (std::size_t j = 0; j < options; ++j) choices[j] = ChoiceId{j};
        const taco::TacoParams params{initial_unit, reduction, indifference, max_steps};
        std::ostringstream trace;
        const taco::NegotiationOutcome out = taco::run_taco(
            choices, [&](std::size_t i, ChoiceId c) { return costs.at(i).at(c.index); }, valuations, params,
            taco::TraceSink{&trace});
        py::dict d;
        d["agreed"] = out.agreed_option;
        d["expenditures"] = out.expenditures;
        d["unit_counts"] = out.unit_counts;
        d["payers"] = out.payers;
        d["beneficiaries"] = out.beneficiaries;
        d["steps"] = out.steps;
        d["trades"] = out.trades;
        d["reductions"] = out.reductions;
        d["final_unit"] = out.final_unit;
        d["terminated_by"] = out.terminated_by == taco::Termination::kUnanimity ? "unanimity" : "indifference";
        d["trace"] = trace.str();
        return d;
      },
      py::arg("costs"), py::arg("valuations"), py::arg("initial_unit") = 1.0, py::arg("reduction") = 0.5,
      py::arg("indifference") = 1e-3, py::arg("max_steps") = 1'000'000,
      "One negotiation; costs[i][j] is agent i's cost of option j.");

  m.def(
      "run_oversight",
      [](const Scenario& scenario, const std::vector<double>& reserves, double kappa, std::uint64_t seed,
         const std::string& solver, int restarts, int moves, std::optional<std::size_t> max_rounds) {
        OversightParams params;
        params.kappa = kappa;
        params.solver = make_solver(solver, restarts, moves, seed);
        params.max_rounds = max_rounds;
        return to_json_string(run_oversight(scenario, reserves, params, seed));
      },
      py::arg("scenario"), py::arg("reserves"), py::arg("kappa"), py::arg("seed") = 0,
      py::arg("solver") = "exhaustive", py::arg("restarts") = 20, py::arg("moves") = 1000,
      py::arg("max_rounds") = std::nullopt, "Run record as JSON text.");

  m.def(
      "rounds_csv",
      [](const std::string& record, const std::string& run_id) {
        return csv_header_rounds() + to_csv_rows(run_record_from_json_string(record), run_id);
      },
      py::arg("record"), py::arg("run_id") = "run");

  m.def(
      "verify_bounds",
      [](const std::string& record_json, std::optional<double> kappa) {
        const RunRecord record = run_record_from_json_string(record_json);
        if (!record.table) throw std::invalid_argument("verify_bounds: record carries no cost table");
        return analysis::to_json_string(analysis::verify_bounds(record, *record.table, kappa.value_or(record.kappa)));
      },
      py::arg("record"), py::arg("kappa") = std::nullopt, "Bound report as JSON text.");

  m.def(
      "centralized",
      [](const Scenario& s, const std::string& solver, std::uint64_t seed) {
        return baseline_dict(baselines::centralized_ctop(s, make_solver(solver, 20, 1000, seed)));
      },
      py::arg("scenario"), py::arg("solver") = "exhaustive", py::arg("seed") = 0);
  m.def(
      "fcfs", [](const Scenario& s) { return baseline_dict(baselines::fcfs_ctop(s)); }, py::arg("scenario"));
  m.def(
      "voting",
      [](const Scenario& s, std::uint64_t seed, const std::string& solver) {
        return baseline_dict(baselines::voting(s, seed, make_solver(solver, 20, 1000, seed)));
      },
      py::arg("scenario"), py::arg("seed") = 0, py::arg("solver") = "exhaustive");

  m.def(
      "run_monte_carlo",
      [](const std::string& config_json) {
        const harness::ExperimentConfig config = harness::config_from_json_string(config_json);
        std::vector<harness::TrialRecord> records;
        {
          py::gil_scoped_release release;
          records = harness::run_monte_carlo(config);
        }
        return py::make_tuple(harness::to_json_string(records), harness::to_csv(records));
      },
      py::arg("config"), "Returns (records JSON, CSV text).");
  m.def("spearman", &harness::spearman, py::arg("x"), py::arg("y"));

  m.def(
      "b_max",
      [](const std::vector<std::vector<double>>& rows) {
        return analysis::b_max(CostTable::from_rows(rows)).b_max;
      },
      py::arg("rows"));
  m.def("round_bound", &analysis::round_bound, py::arg("kappa"), py::arg("b_max"));
  m.def("kappa_for_rounds", &analysis::kappa_for_rounds, py::arg("rounds"), py::arg("b_max"));
  m.def("gap_bound", &analysis::gap_bound, py::arg("agents"), py::arg("b_max"), py::arg("delta"),
        py::arg("alpha"));
  m.def("kappa_for_gap", &analysis::kappa_for_gap, py::arg("agents"), py::arg("b_max"), py::arg("target_gap"));
  m.def("sigma_max", &analysis::sigma_max, py::arg("agents"));
  m.def(
      "delta_misalignment", [](const std::vector<double>& w) { return analysis::delta_misalignment(w); },
      py::arg("weights"));
  m.def(
      "gini", [](const std::vector<double>& x) { return analysis::gini(x); }, py::arg("costs"));
  m.def(
      "system_optimum",
      [](const std::vector<std::vector<double>>& rows) {
        const analysis::Optimum opt = analysis::system_optimum(CostTable::from_rows(rows));
        return py::make_tuple(opt.choice.index, opt.value);
      },
      py::arg("rows"));
  m.def(
      "eigen_complexity",
      [](const std::vector<std::vector<int>>& counts) {
        const std::size_t bins = counts.size();
        const std::size_t cells = bins == 0 ? 0 : counts[0].size();
        ctop::TrafficMatrix traffic(bins, cells);
        for (std::size_t t = 0; t < bins; ++t) {
          if (counts[t].size() != cells) throw std::invalid_argument("eigen_complexity: ragged rows");
          for (std::size_t c = 0; c < cells; ++c) traffic(t, c) = counts[t][c];
        }
        return ctop::eigen_complexity(traffic);
      },
      py::arg("counts"), "Leading eigenvalue of the occupancy covariance; rows are time bins.");
}
