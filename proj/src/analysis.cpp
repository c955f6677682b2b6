#include "nego/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace nego::analysis {

namespace {

// Slack for floating-point comparisons against analytical bounds.
double tolerance(double magnitude) { return 1e-9 * std::max(1.0, std::abs(magnitude)); }

double normalized_score(std::span<const double> normalized, std::span<const double> costs) {
  return std::inner_product(normalized.begin(), normalized.end(), costs.begin(), 0.0);
}

SelectionError selection_error_normalized(std::span<const double> normalized, const CostTable& table, ChoiceId chosen) {
  SelectionError out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < table.choices(); ++c) {
    const double s = normalized_score(normalized, table.row(ChoiceId{c}));
    if (s < best) {
      best = s;
      out.reference = ChoiceId{c};
    }
  }
  out.eta = normalized_score(normalized, table.row(chosen)) - best;
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

CostSpread b_max(const CostTable& table) {
  CostSpread out;
  out.per_agent.assign(table.agents(), 0.0);
  for (std::size_t a = 0; a < table.agents(); ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t c = 0; c < table.choices(); ++c) {
      lo = std::min(lo, table(ChoiceId{c}, a));
      hi = std::max(hi, table(ChoiceId{c}, a));
    }
    out.per_agent[a] = table.choices() == 0 ? 0.0 : hi - lo;
    out.b_max = std::max(out.b_max, out.per_agent[a]);
  }
  return out;
}

std::size_t round_bound(double kappa, double b_max) {
  const double product = std::ceil(kappa * b_max);
  return product < 1.0 ? 1 : static_cast<std::size_t>(product);
}

double kappa_for_rounds(std::size_t desired_rounds, double b_max) {
  if (desired_rounds == 0) throw std::invalid_argument("kappa_for_rounds: desired rounds must be >= 1");
  if (b_max == 0.0) return std::numeric_limits<double>::infinity();
  const auto r = static_cast<double>(desired_rounds);
  double kappa = r / b_max;
  // Rounding in the division can leave κ B_max a hair above r.
  while (std::ceil(kappa * b_max) > r) kappa = std::nextafter(kappa, 0.0);
  return kappa;
}

double gap_bound(std::size_t agents, double b_max, double delta, double alpha) {
  return static_cast<double>(agents) * (b_max * delta + b_max / alpha);
}

double kappa_for_gap(std::size_t agents, double b_max, double target_gap) {
  const double floor_gap = 2.0 * (static_cast<double>(agents) - 1.0) * b_max;
  if (!(target_gap > floor_gap)) {
    throw InfeasibleTarget("target gap " + fmt(target_gap) + " must exceed 2(n-1)B_max = " + fmt(floor_gap));
  }
  if (b_max == 0.0) return 0.0;
  return std::floor(static_cast<double>(agents) * b_max / (target_gap - floor_gap)) / b_max;
}

double sigma_max(std::size_t agents) { return 2.0 * (1.0 - 1.0 / static_cast<double>(agents)); }

double misalignment(std::span<const double> normalized) {
  const double u = 1.0 / static_cast<double>(normalized.size());
  double total = 0.0;
  for (double w : normalized) total += std::abs(w - u);
  return total;
}

double delta_misalignment(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("delta_misalignment: empty weight vector");
  const double alpha = std::accumulate(weights.begin(), weights.end(), 0.0) + 1.0;
  std::vector<double> normalized(weights.begin(), weights.end());
  for (double& w : normalized) w /= alpha;
  return misalignment(normalized);
}

double system_cost(const CostTable& table, ChoiceId choice) {
  if (choice.index >= table.choices()) throw std::out_of_range("system_cost: choice out of range");
  const auto row = table.row(choice);
  return std::accumulate(row.begin(), row.end(), 0.0);
}

Optimum system_optimum(const CostTable& table) {
  if (table.choices() == 0) throw std::invalid_argument("system_optimum: empty choice set");
  Optimum best{ChoiceId{0}, system_cost(table, ChoiceId{0})};
  for (std::size_t c = 1; c < table.choices(); ++c) {
    const double v = system_cost(table, ChoiceId{c});
    if (v < best.value) best = {ChoiceId{c}, v};
  }
  return best;
}

SelectionError selection_error(std::span<const double> weights, const CostTable& table, ChoiceId chosen) {
  if (weights.size() != table.agents()) throw std::invalid_argument("selection_error: weight dimension mismatch");
  table.at(chosen, 0);
  const double alpha = std::accumulate(weights.begin(), weights.end(), 0.0) + 1.0;
  std::vector<double> normalized(weights.begin(), weights.end());
  for (double& w : normalized) w /= alpha;
  return selection_error_normalized(normalized, table, chosen);
}

bool gini_needs_shift(std::span<const double> costs) {
  return std::any_of(costs.begin(), costs.end(), [](double x) { return x < 0.0; });
}

double gini(std::span<const double> costs) {
  if (costs.empty()) throw std::invalid_argument("gini: empty cost vector");
  std::vector<double> x(costs.begin(), costs.end());
  if (gini_needs_shift(x)) {
    const double lo = *std::min_element(x.begin(), x.end());
    for (double& v : x) v -= lo;
  }
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double diff = 0.0;
  for (double a : x) {
    for (double b : x) diff += std::abs(a - b);
  }
  return diff / (2.0 * n * n * mean);
}

double effective_spread(std::span<const double> weights, double alpha, std::size_t agent, const CostTable& table,
                        std::span<const ChoiceId> pool) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (ChoiceId c : pool) {
    const auto row = table.row(c);
    const double v = (std::inner_product(weights.begin(), weights.end(), row.begin(), 0.0) + row[agent]) / alpha;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return pool.empty() ? 0.0 : hi - lo;
}

BoundReport verify_bounds(const RunRecord& record, const CostTable& table, double kappa, const GuideTargets& targets) {
  BoundReport rep;
  const CostSpread spread = b_max(table);
  const std::size_t n = table.agents();
  rep.b_max = spread.b_max;
  rep.per_agent = spread.per_agent;
  rep.agents = n;
  rep.sigma_max = sigma_max(n);
  rep.round_bound = round_bound(kappa, spread.b_max);
  rep.r_term = record.rounds.size();
  const double B = spread.b_max;

  std::optional<Optimum> opt;
  if (table.choices() > 0) opt = system_optimum(table);
  rep.gap_checked = opt.has_value();

  for (const RoundEntry& entry : record.rounds) {
    RoundBounds rb;
    rb.round = entry.round;
    rb.alpha = entry.alpha;
    std::vector<double> normalized(entry.weights);
    for (double& w : normalized) w /= entry.alpha;
    rb.delta = misalignment(normalized);
    const SelectionError se = selection_error_normalized(normalized, table, entry.agreed);
    rb.eta = se.eta;
    rb.reference = se.reference;
    rb.eta_bound = B / entry.alpha;
    if (opt) rb.gap = system_cost(table, entry.agreed) - opt->value;
    rb.gap_bound = gap_bound(n, B, rb.delta, entry.alpha);
    for (std::size_t a = 0; a < n; ++a) {
      rb.max_spread = std::max(rb.max_spread, effective_spread(entry.weights, entry.alpha, a, table, entry.pool));
    }
    rb.payer_bound = B / entry.alpha;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n && j < record.valuations.size(); ++j) {
      if (entry.expenditures[j] <= 0.0) continue;
      const double value = record.valuations[j] * entry.expenditures[j];
      const double bound = B / entry.alpha + entry.final_unit * record.valuations[j];
      rb.max_payer_value = std::max(rb.max_payer_value, value);
      if (value - bound > worst_excess) {
        worst_excess = value - bound;
        rb.payer_bound = bound;
      }
    }

    if (rb.eta < -tolerance(rb.eta_bound) || rb.eta > rb.eta_bound + tolerance(rb.eta_bound)) ++rep.selection_violations;
    if (rep.gap_checked && (rb.gap < -tolerance(rb.gap) || rb.gap > rb.gap_bound + tolerance(rb.gap_bound))) {
      ++rep.gap_violations;
    }
    if (rb.max_spread > B / entry.alpha + tolerance(B)) ++rep.flattening_violations;
    if (worst_excess > tolerance(rb.payer_bound)) ++rep.payer_violations;
    if (n >= 2 && rb.delta > rep.sigma_max + tolerance(rep.sigma_max)) ++rep.delta_violations;
    rep.max_conservation_residual = std::max(rep.max_conservation_residual, entry.conservation_residual);
    if (entry.conservation_residual > 1e-9) ++rep.conservation_violations;
    rep.delta_bar = std::max(rep.delta_bar, rb.delta);
    rep.rounds.push_back(rb);
  }

  if (!record.completed || rep.r_term > rep.round_bound) ++rep.termination_violations;
  if (!rep.rounds.empty()) {
    rep.gap = rep.rounds.back().gap;
    rep.gap_bound = rep.rounds.back().gap_bound;
    if (record.completed) {
      const RoundEntry& last = record.rounds.back();
      for (std::size_t i = 0; i < n && i < record.reserves.size(); ++i) {
        if (last.expenditures[i] > record.reserves[i] + tolerance(record.reserves[i])) ++rep.feasibility_violations;
      }
    }
  }

  const std::size_t desired = targets.desired_rounds.value_or(rep.round_bound);
  rep.kappa_max_for_rounds = desired == 0 ? 0.0 : kappa_for_rounds(desired, B);
  const double tau = targets.target_gap.value_or(rep.gap_bound);
  try {
    rep.kappa_min_for_gap = kappa_for_gap(n, B, tau);
  } catch (const InfeasibleTarget&) {
    rep.kappa_min_for_gap.reset();
  }
  return rep;
}

bool BoundReport::any_violation() const {
  return termination_violations + gap_violations + selection_violations + flattening_violations +
             payer_violations + delta_violations + feasibility_violations + conservation_violations >
         0;
}

std::vector<BoundReport::Line> BoundReport::lines() const {
  double worst_eta = 0.0, worst_spread = 0.0, worst_delta = 0.0;
  for (const RoundBounds& rb : rounds) {
    if (rb.eta_bound > 0) worst_eta = std::max(worst_eta, rb.eta / rb.eta_bound);
    if (b_max > 0) worst_spread = std::max(worst_spread, rb.max_spread * rb.alpha / b_max);
    worst_delta = std::max(worst_delta, rb.delta);
  }
  std::vector<Line> out;
  out.push_back({"termination round", termination_violations == 0,
                 "r_term=" + std::to_string(r_term) + " bound=" + std::to_string(round_bound)});
  out.push_back({"optimality gap", gap_checked && gap_violations == 0,
                 gap_checked ? "gap=" + fmt(gap) + " bound=" + fmt(gap_bound) : "skipped: optimum not enumerable"});
  out.push_back({"selection error", selection_violations == 0,
                 "max eta/(B_max/alpha)=" + fmt(worst_eta) + " violations=" + std::to_string(selection_violations)});
  out.push_back({"effective-cost flattening", flattening_violations == 0,
                 "max spread/(B_max/alpha)=" + fmt(worst_spread) +
                     " violations=" + std::to_string(flattening_violations)});
  out.push_back({"payer transfer value", payer_violations == 0, "violations=" + std::to_string(payer_violations)});
  out.push_back({"weight misalignment", delta_violations == 0,
                 "max delta=" + fmt(worst_delta) + " sigma_max=" + fmt(sigma_max)});
  out.push_back({"terminal reserve feasibility", feasibility_violations == 0,
                 "violations=" + std::to_string(feasibility_violations)});
  out.push_back({"ledger conservation", conservation_violations == 0,
                 "max residual=" + fmt(max_conservation_residual)});
  return out;
}

std::string to_json_string(const BoundReport& rep) {
  using nlohmann::json;
  json rounds = json::array();
  for (const RoundBounds& rb : rep.rounds) {
    rounds.push_back({{"round", rb.round},
                      {"alpha", rb.alpha},
                      {"delta", rb.delta},
                      {"eta", rb.eta},
                      {"reference", rb.reference.index},
                      {"eta_bound", rb.eta_bound},
                      {"gap", rb.gap},
                      {"gap_bound", rb.gap_bound},
                      {"max_spread", rb.max_spread},
                      {"max_payer_value", rb.max_payer_value},
                      {"payer_bound", rb.payer_bound}});
  }
  json j{{"b_max", rep.b_max},
         {"per_agent", rep.per_agent},
         {"agents", rep.agents},
         {"round_bound", rep.round_bound},
         {"r_term", rep.r_term},
         {"gap_checked", rep.gap_checked},
         {"gap", rep.gap},
         {"gap_bound", rep.gap_bound},
         {"sigma_max", rep.sigma_max},
         {"delta_bar", rep.delta_bar},
         {"max_conservation_residual", rep.max_conservation_residual},
         {"kappa_max_for_rounds", rep.kappa_max_for_rounds},
         {"kappa_min_for_gap", rep.kappa_min_for_gap ? json(*rep.kappa_min_for_gap) : json(nullptr)},
         {"violations",
          {{"termination", rep.termination_violations},
           {"gap", rep.gap_violations},
           {"selection", rep.selection_violations},
           {"flattening", rep.flattening_violations},
           {"payer", rep.payer_violations},
           {"delta", rep.delta_violations},
           {"feasibility", rep.feasibility_violations},
           {"conservation", rep.conservation_violations}}},
         {"rounds", std::move(rounds)}};
  if (std::isinf(rep.kappa_max_for_rounds)) j["kappa_max_for_rounds"] = "inf";
  return j.dump(1);
}

}  // namespace nego::analysis
