#include "nego/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nego/oversight.hpp"
#include "nego/rng.hpp"

namespace nego::harness {

using json = nlohmann::json;

namespace {

// Stream tags for derive_seed so each consumer of a trial's randomness is independent.
constexpr std::uint64_t kParamsStream = 1;
constexpr std::uint64_t kScenarioStream = 2;
constexpr std::uint64_t kRunStream = 3;

std::string mode_name(ScenarioMode mode) { return mode == ScenarioMode::kFixed ? "fixed" : "per-trial"; }

ScenarioMode mode_from_name(const std::string& name) {
  if (name == "fixed") return ScenarioMode::kFixed;
  if (name == "per-trial") return ScenarioMode::kPerTrial;
  throw std::invalid_argument("config.mode: expected fixed or per-trial, got '" + name + "'");
}

template <typename T>
void read_key(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ctop::SchemaError(where + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ctop::SchemaError(where + ": unknown key '" + key + "'");
    }
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials == 0) throw std::invalid_argument("config: trials must be >= 1");
  if (!(reserve_lo > 0.0) || !(reserve_hi >= reserve_lo)) {
    throw std::invalid_argument("config: reserve range must satisfy 0 < reserve_lo <= reserve_hi");
  }
  if (!(k_lo < k_hi)) throw std::invalid_argument("config: k_lo must be below k_hi");
  if (threads == 0) throw std::invalid_argument("config: threads must be >= 1");
  if (!(indifference_per_bmax > 0.0)) throw std::invalid_argument("config: indifference_per_bmax must be positive");
  if (mode == ScenarioMode::kPerTrial && scenario_file) {
    throw std::invalid_argument("config: a scenario file implies mode 'fixed'");
  }
  taco.validate();
}

ExperimentConfig config_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ctop::SchemaError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ctop::SchemaError("config: expected an object");
  reject_unknown(j,
                 {"trials", "mode", "generator", "scenario_file", "reserve_lo", "reserve_hi", "k_lo", "k_hi", "seed",
                  "solver", "taco", "indifference_per_bmax", "baselines", "threads", "out_dir"},
                 "config");
  ExperimentConfig c;
  read_key(j, "trials", c.trials, "config");
  if (j.contains("mode")) {
    std::string mode;
    read_key(j, "mode", mode, "config");
    c.mode = mode_from_name(mode);
  }
  if (j.contains("generator")) {
    const json& g = j["generator"];
    reject_unknown(g, {"sectors", "flights", "options", "grid", "horizon"}, "config.generator");
    read_key(g, "sectors", c.generator.sectors, "config.generator");
    read_key(g, "flights", c.generator.flights, "config.generator");
    read_key(g, "options", c.generator.options, "config.generator");
    read_key(g, "grid", c.generator.grid, "config.generator");
    read_key(g, "horizon", c.generator.horizon, "config.generator");
  }
  if (j.contains("scenario_file") && !j["scenario_file"].is_null()) {
    std::string path;
    read_key(j, "scenario_file", path, "config");
    c.scenario_file = path;
  }
  read_key(j, "reserve_lo", c.reserve_lo, "config");
  read_key(j, "reserve_hi", c.reserve_hi, "config");
  read_key(j, "k_lo", c.k_lo, "config");
  read_key(j, "k_hi", c.k_hi, "config");
  read_key(j, "seed", c.seed, "config");
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, {"kind", "restarts", "moves", "seed", "exhaustive_limit"}, "config.solver");
    if (s.contains("kind")) {
      std::string kind;
      read_key(s, "kind", kind, "config.solver");
      c.solver.kind = solver_kind_from_string(kind);
    }
    read_key(s, "restarts", c.solver.restarts, "config.solver");
    read_key(s, "moves", c.solver.moves, "config.solver");
    read_key(s, "seed", c.solver.seed, "config.solver");
    read_key(s, "exhaustive_limit", c.solver.exhaustive_limit, "config.solver");
  }
  if (j.contains("taco")) {
    const json& t = j["taco"];
    reject_unknown(t, {"initial_unit", "reduction", "indifference", "max_steps"}, "config.taco");
    read_key(t, "initial_unit", c.taco.initial_unit, "config.taco");
    read_key(t, "reduction", c.taco.reduction, "config.taco");
    read_key(t, "indifference", c.taco.indifference, "config.taco");
    read_key(t, "max_steps", c.taco.max_steps, "config.taco");
  }
  read_key(j, "indifference_per_bmax", c.indifference_per_bmax, "config");
  read_key(j, "baselines", c.baselines, "config");
  read_key(j, "threads", c.threads, "config");
  if (j.contains("out_dir")) {
    std::string dir;
    read_key(j, "out_dir", dir, "config");
    c.out_dir = dir;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json_string(read_text(path));
  } catch (const ctop::SchemaError& e) {
    throw ctop::SchemaError(path.string() + ": " + e.what());
  }
}

std::string to_json_string(const ExperimentConfig& c) {
  json j{{"trials", c.trials},
         {"mode", mode_name(c.mode)},
         {"generator",
          {{"sectors", c.generator.sectors},
           {"flights", c.generator.flights},
           {"options", c.generator.options},
           {"grid", c.generator.grid},
           {"horizon", c.generator.horizon}}},
         {"scenario_file", c.scenario_file ? json(c.scenario_file->string()) : json(nullptr)},
         {"reserve_lo", c.reserve_lo},
         {"reserve_hi", c.reserve_hi},
         {"k_lo", c.k_lo},
         {"k_hi", c.k_hi},
         {"seed", c.seed},
         {"solver",
          {{"kind", to_string(c.solver.kind)},
           {"restarts", c.solver.restarts},
           {"moves", c.solver.moves},
           {"seed", c.solver.seed},
           {"exhaustive_limit", c.solver.exhaustive_limit}}},
         {"taco",
          {{"initial_unit", c.taco.initial_unit},
           {"reduction", c.taco.reduction},
           {"indifference", c.taco.indifference},
           {"max_steps", c.taco.max_steps}}},
         {"indifference_per_bmax", c.indifference_per_bmax},
         {"baselines", c.baselines},
         {"threads", c.threads},
         {"out_dir", c.out_dir.string()}};
  return j.dump(1);
}

TrialParams sample_trial_params(const ExperimentConfig& config, std::size_t trial, std::size_t agents) {
  Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(trial), kParamsStream}));
  TrialParams p;
  for (std::size_t i = 0; i < agents; ++i) p.reserves.push_back(rng.uniform(config.reserve_lo, config.reserve_hi));
  p.k = rng.uniform(config.k_lo, config.k_hi);
  p.kappa = std::pow(10.0, p.k);
  return p;
}

double TrialRecord::cost_ratio() const {
  if (cost_first == 0.0 && cost_final == 0.0) return 1.0;
  return cost_final / cost_first;
}

double TrialRecord::gini_ratio() const {
  if (gini_first == 0.0 && gini_final == 0.0) return 1.0;
  return gini_final / gini_first;
}

bool TrialRecord::same_result(const TrialRecord& o) const {
  return trial == o.trial && reserves == o.reserves && kappa == o.kappa && b_mean == o.b_mean && ok == o.ok &&
         error == o.error && r_term == o.r_term && r_bound == o.r_bound && b_max == o.b_max &&
         agreed_choice == o.agreed_choice && cost_first == o.cost_first && cost_final == o.cost_final &&
         gini_first == o.gini_first && gini_final == o.gini_final && optimum == o.optimum && gap == o.gap &&
         gap_bound == o.gap_bound && gap_checked == o.gap_checked && worst_eta_ratio == o.worst_eta_ratio &&
         worst_spread_ratio == o.worst_spread_ratio && worst_payer_excess == o.worst_payer_excess &&
         max_conservation_residual == o.max_conservation_residual &&
         violations_termination == o.violations_termination && violations_gap == o.violations_gap &&
         violations_selection == o.violations_selection && violations_flattening == o.violations_flattening &&
         violations_payer == o.violations_payer && violations_delta == o.violations_delta &&
         violations_feasibility == o.violations_feasibility &&
         violations_conservation == o.violations_conservation && baselines == o.baselines;
}

namespace {

Scenario fixed_scenario_for(const ExperimentConfig& config) {
  if (config.scenario_file) return load_scenario(*config.scenario_file);
  return Scenario::from_ctop(ctop::generate_scenario(config.generator, config.seed));
}

void fill_from_run(TrialRecord& rec, const RunRecord& run, const CostTable* table) {
  rec.r_term = run.r_term;
  rec.r_bound = run.round_bound;
  rec.b_max = run.b_max;
  rec.agreed_choice = run.agreed.index;
  rec.cost_first = run.rounds.front().system_cost;
  rec.cost_final = run.rounds.back().system_cost;
  rec.gini_first = run.rounds.front().gini;
  rec.gini_final = run.rounds.back().gini;
  if (table == nullptr) {
    rec.gap_checked = false;
    return;
  }
  const analysis::BoundReport rep = analysis::verify_bounds(run, *table, run.kappa);
  rec.optimum = analysis::system_optimum(*table).value;
  rec.gap = rep.gap;
  rec.gap_bound = rep.gap_bound;
  rec.gap_checked = rep.gap_checked;
  rec.worst_payer_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rep.rounds.size(); ++r) {
    const analysis::RoundBounds& rb = rep.rounds[r];
    const double scale = rep.b_max / rb.alpha;
    if (scale > 0.0) {
      rec.worst_eta_ratio = std::max(rec.worst_eta_ratio, rb.eta / scale);
      rec.worst_spread_ratio = std::max(rec.worst_spread_ratio, rb.max_spread / scale);
    }
    const RoundEntry& entry = run.rounds[r];
    for (std::size_t j = 0; j < entry.expenditures.size(); ++j) {
      if (entry.expenditures[j] <= 0.0) continue;
      const double bound = scale + entry.final_unit * run.valuations[j];
      rec.worst_payer_excess = std::max(rec.worst_payer_excess, run.valuations[j] * entry.expenditures[j] - bound);
    }
  }
  if (std::isinf(rec.worst_payer_excess)) rec.worst_payer_excess = 0.0;
  rec.max_conservation_residual = rep.max_conservation_residual;
  rec.violations_termination = rep.termination_violations;
  rec.violations_gap = rep.gap_violations;
  rec.violations_selection = rep.selection_violations;
  rec.violations_flattening = rep.flattening_violations;
  rec.violations_payer = rep.payer_violations;
  rec.violations_delta = rep.delta_violations;
  rec.violations_feasibility = rep.feasibility_violations;
  rec.violations_conservation = rep.conservation_violations;
}

BaselineSummary summarize(const baselines::BaselineResult& r) {
  return BaselineSummary{r.mechanism, r.choice.index, r.system_cost, r.gini};
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& config, std::size_t trial, const Scenario* fixed_scenario) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.trial = trial;
  try {
    std::optional<Scenario> own;
    if (fixed_scenario == nullptr) {
      if (config.mode == ScenarioMode::kPerTrial) {
        const std::uint64_t s = derive_seed(config.seed, {static_cast<std::uint64_t>(trial), kScenarioStream});
        own = Scenario::from_ctop(ctop::generate_scenario(config.generator, s));
      } else {
        own = fixed_scenario_for(config);
      }
      fixed_scenario = &*own;
    }
    const Scenario& scenario = *fixed_scenario;
    const TrialParams params = sample_trial_params(config, trial, scenario.agents());
    rec.reserves = params.reserves;
    rec.kappa = params.kappa;
    for (double r : params.reserves) rec.b_mean += asset_valuation(params.kappa, r);
    rec.b_mean /= static_cast<double>(params.reserves.size());

    OversightParams op;
    op.kappa = params.kappa;
    op.taco = config.taco;
    op.indifference_per_bmax = config.indifference_per_bmax;
    op.solver = config.solver;
    const std::uint64_t run_seed = derive_seed(config.seed, {static_cast<std::uint64_t>(trial), kRunStream});
    const RunRecord run = run_oversight(scenario, params.reserves, op, run_seed);
    fill_from_run(rec, run, scenario.table());

    if (config.baselines) {
      rec.baselines.push_back(summarize(baselines::centralized_ctop(scenario, config.solver)));
      if (scenario.is_ctop()) rec.baselines.push_back(summarize(baselines::fcfs_ctop(scenario)));
      rec.baselines.push_back(summarize(baselines::voting(scenario, run_seed, config.solver)));
    }
    rec.ok = true;
  } catch (const OversightCapError& e) {
    rec.error = e.what();
    if (!e.partial().rounds.empty()) {
      rec.r_term = e.partial().r_term;
      rec.r_bound = e.partial().round_bound;
      rec.violations_termination = 1;
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<TrialRecord> run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  std::optional<Scenario> fixed;
  if (config.mode == ScenarioMode::kFixed) fixed = fixed_scenario_for(config);
  const Scenario* shared = fixed ? &*fixed : nullptr;

  std::vector<TrialRecord> records(config.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < config.trials; t = next++) records[t] = run_trial(config, t, shared);
  };
  const std::size_t workers = std::min(config.threads, config.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  return records;
}

std::string csv_header() {
  return "trial,kappa,b_mean,r_term,r_bound,cost_first,cost_final,cost_ratio,gini_first,gini_final,gini_ratio,gap,"
         "gap_bound,mechanism,choice,violations,error\n";
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::string out = csv_header();
  for (const TrialRecord& r : records) {
    const std::size_t violations = r.violations_termination + r.violations_gap + r.violations_selection +
                                   r.violations_flattening + r.violations_payer + r.violations_delta +
                                   r.violations_feasibility + r.violations_conservation;
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    const std::string common = std::to_string(r.trial) + "," + num(r.kappa) + "," + num(r.b_mean) + ",";
    out += common + std::to_string(r.r_term) + "," + std::to_string(r.r_bound) + "," + num(r.cost_first) + "," +
           num(r.cost_final) + "," + num(r.cost_ratio()) + "," + num(r.gini_first) + "," + num(r.gini_final) + "," +
           num(r.gini_ratio()) + "," + (r.gap_checked ? num(r.gap) : "") + "," +
           (r.gap_checked ? num(r.gap_bound) : "") + ",oversight," + std::to_string(r.agreed_choice) + "," +
           std::to_string(violations) + "," + error + "\n";
    for (const BaselineSummary& b : r.baselines) {
      out += common + ",," + num(b.system_cost) + "," + num(b.system_cost) + ",1," + num(b.gini) + "," + num(b.gini) +
             ",1," + (r.gap_checked ? num(b.system_cost - r.optimum) : "") + ",," + baselines::to_string(b.mechanism) +
             "," + std::to_string(b.choice) + ",0,\n";
    }
  }
  return out;
}

std::string to_json_string(const std::vector<TrialRecord>& records) {
  json arr = json::array();
  for (const TrialRecord& r : records) {
    json bl = json::array();
    for (const BaselineSummary& b : r.baselines) {
      bl.push_back({{"mechanism", baselines::to_string(b.mechanism)},
                    {"choice", b.choice},
                    {"system_cost", b.system_cost},
                    {"gini", b.gini}});
    }
    arr.push_back({{"trial", r.trial},
                   {"reserves", r.reserves},
                   {"kappa", r.kappa},
                   {"b_mean", r.b_mean},
                   {"ok", r.ok},
                   {"error", r.error},
                   {"r_term", r.r_term},
                   {"r_bound", r.r_bound},
                   {"b_max", r.b_max},
                   {"agreed_choice", r.agreed_choice},
                   {"cost_first", r.cost_first},
                   {"cost_final", r.cost_final},
                   {"gini_first", r.gini_first},
                   {"gini_final", r.gini_final},
                   {"optimum", r.optimum},
                   {"gap", r.gap},
                   {"gap_bound", r.gap_bound},
                   {"gap_checked", r.gap_checked},
                   {"worst_eta_ratio", r.worst_eta_ratio},
                   {"worst_spread_ratio", r.worst_spread_ratio},
                   {"worst_payer_excess", r.worst_payer_excess},
                   {"max_conservation_residual", r.max_conservation_residual},
                   {"violations",
                    {{"termination", r.violations_termination},
                     {"gap", r.violations_gap},
                     {"selection", r.violations_selection},
                     {"flattening", r.violations_flattening},
                     {"payer", r.violations_payer},
                     {"delta", r.violations_delta},
                     {"feasibility", r.violations_feasibility},
                     {"conservation", r.violations_conservation}}},
                   {"baselines", std::move(bl)},
                   {"wall_seconds", r.wall_seconds}});
  }
  // b terciles are metadata for grouping trials into low/medium/high valuation.
  std::vector<double> b;
  for (const TrialRecord& r : records) {
    if (r.ok) b.push_back(r.b_mean);
  }
  std::sort(b.begin(), b.end());
  json meta{{"b_mean_terciles", json::array()}};
  if (!b.empty()) {
    meta["b_mean_terciles"] = {b[b.size() / 3], b[(2 * b.size()) / 3]};
  }
  return json{{"metadata", std::move(meta)}, {"trials", std::move(arr)}}.dump(1);
}

std::vector<TrialRecord> records_from_json_string(const std::string& text) {
  std::vector<TrialRecord> out;
  try {
    const json j = json::parse(text);
    for (const json& t : j.at("trials")) {
      TrialRecord r;
      r.trial = t.at("trial").get<std::size_t>();
      r.reserves = t.at("reserves").get<std::vector<double>>();
      r.kappa = t.at("kappa").get<double>();
      r.b_mean = t.at("b_mean").get<double>();
      r.ok = t.at("ok").get<bool>();
      r.error = t.at("error").get<std::string>();
      r.r_term = t.at("r_term").get<std::size_t>();
      r.r_bound = t.at("r_bound").get<std::size_t>();
      r.b_max = t.at("b_max").get<double>();
      r.agreed_choice = t.at("agreed_choice").get<std::uint64_t>();
      r.cost_first = t.at("cost_first").get<double>();
      r.cost_final = t.at("cost_final").get<double>();
      r.gini_first = t.at("gini_first").get<double>();
      r.gini_final = t.at("gini_final").get<double>();
      r.optimum = t.at("optimum").get<double>();
      r.gap = t.at("gap").get<double>();
      r.gap_bound = t.at("gap_bound").get<double>();
      r.gap_checked = t.at("gap_checked").get<bool>();
      r.worst_eta_ratio = t.at("worst_eta_ratio").get<double>();
      r.worst_spread_ratio = t.at("worst_spread_ratio").get<double>();
      r.worst_payer_excess = t.at("worst_payer_excess").get<double>();
      r.max_conservation_residual = t.at("max_conservation_residual").get<double>();
      const json& v = t.at("violations");
      r.violations_termination = v.at("termination").get<std::size_t>();
      r.violations_gap = v.at("gap").get<std::size_t>();
      r.violations_selection = v.at("selection").get<std::size_t>();
      r.violations_flattening = v.at("flattening").get<std::size_t>();
      r.violations_payer = v.at("payer").get<std::size_t>();
      r.violations_delta = v.at("delta").get<std::size_t>();
      r.violations_feasibility = v.at("feasibility").get<std::size_t>();
      r.violations_conservation = v.at("conservation").get<std::size_t>();
      for (const json& b : t.at("baselines")) {
        r.baselines.push_back(BaselineSummary{baselines::mechanism_from_string(b.at("mechanism").get<std::string>()),
                                              b.at("choice").get<std::uint64_t>(), b.at("system_cost").get<double>(),
                                              b.at("gini").get<double>()});
      }
      r.wall_seconds = t.at("wall_seconds").get<double>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ctop::SchemaError(std::string("results: ") + e.what());
  }
  return out;
}

void export_results(const std::vector<TrialRecord>& records, Format format, const std::filesystem::path& path) {
  write_text(path, format == Format::kCsv ? to_csv(records) : to_json_string(records));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace nego::harness
