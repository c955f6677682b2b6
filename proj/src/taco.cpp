#include "nego/taco.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace nego::taco {

void TacoParams::validate() const {
  if (!(initial_unit > 0.0)) throw std::invalid_argument("TACo: initial trading unit must be positive");
  if (!(reduction > 0.0 && reduction < 1.0)) throw std::invalid_argument("TACo: reduction factor must lie in (0, 1)");
  if (!(indifference > 0.0)) throw std::invalid_argument("TACo: indifference tolerance must be positive");
  if (max_steps == 0) throw std::invalid_argument("TACo: max_steps must be positive");
}

TradingLedger::TradingLedger(std::size_t agents, std::size_t options, double unit)
    : agents_(agents),
      options_(options),
      unit_(unit),
      offers_(agents * options, 0.0),
      payments_(agents * options, 0.0) {}

void TradingLedger::apply_selection(std::size_t selector, std::size_t option) {
  if (selector >= agents_ || option >= options_) throw std::out_of_range("apply_selection: index out of range");
  payments_[selector * options_ + option] += static_cast<double>(agents_) * unit_;
  for (std::size_t i = 0; i < agents_; ++i) offers_[i * options_ + option] += unit_;
}

double TradingLedger::conservation_residual() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < options_; ++j) {
    double net = 0.0;
    for (std::size_t i = 0; i < agents_; ++i) net += payment(i, j) - offer(i, j);
    worst = std::max(worst, std::abs(net));
  }
  return worst;
}

double profit(double valuation, double offer, double payment, double cost) {
  return valuation * (offer - payment) - cost;
}

std::size_t select_best(std::span<const double> profits) {
  if (profits.empty()) throw std::invalid_argument("select_best: empty profit vector");
  std::size_t best = 0;
  for (std::size_t j = 1; j < profits.size(); ++j) {
    if (profits[j] > profits[best]) best = j;
  }
  return best;
}

void reduce_unit(double& unit, double reduction) { unit *= reduction; }

double expenditure(const TradingLedger& ledger, std::size_t agent, std::size_t option) {
  return ledger.payment(agent, option) - ledger.offer(agent, option);
}

std::optional<std::size_t> CycleDetector::observe(std::size_t agent, std::span<const double> profits,
                                                  std::size_t step, double scale) {
  const double top = *std::max_element(profits.begin(), profits.end());
  std::vector<double> relative(profits.begin(), profits.end());
  for (double& p : relative) p -= top;
  const double tol = 1e-12 * scale;
  for (const Entry& e : seen_[agent]) {
    bool same = true;
    for (std::size_t j = 0; j < relative.size() && same; ++j) same = std::abs(relative[j] - e.relative[j]) <= tol;
    if (same) return e.step;
  }
  seen_[agent].push_back(Entry{std::move(relative), step});
  return std::nullopt;
}

void CycleDetector::clear() {
  for (auto& entries : seen_) entries.clear();
}

LedgerHistory::LedgerHistory(std::size_t agents, std::size_t options)
    : agents_(agents), options_(options), counts_(agents * options, 0) {}

void LedgerHistory::record_trade(std::size_t selector, std::size_t option) {
  for (std::size_t i = 0; i < agents_; ++i) {
    counts_[i * options_ + option] += i == selector ? -static_cast<long long>(agents_ - 1) : 1;
  }
}

std::optional<std::size_t> LedgerHistory::observe(std::size_t agent, std::size_t step) {
  std::vector<long long> key;
  key.reserve(counts_.size() + 1);
  key.push_back(static_cast<long long>(agent));
  for (std::size_t i = 0; i < agents_; ++i) {
    const long long base = counts_[i * options_];
    for (std::size_t j = 0; j < options_; ++j) key.push_back(counts_[i * options_ + j] - base);
  }
  const auto [it, inserted] = seen_.emplace(std::move(key), step);
  if (inserted) return std::nullopt;
  return it->second;
}

void LedgerHistory::clear() {
  std::fill(counts_.begin(), counts_.end(), 0);
  seen_.clear();
}

namespace {

// Private to each negotiating agent: its valuation and its costs per option.
struct AgentState {
  double valuation;
  std::vector<double> costs;

  void profits(const TradingLedger& ledger, std::size_t self, std::vector<double>& out) const {
    out.resize(costs.size());
    for (std::size_t j = 0; j < costs.size(); ++j) {
      out[j] = profit(valuation, ledger.offer(self, j), ledger.payment(self, j), costs[j]);
    }
  }
};

void emit(const TraceSink& trace, std::size_t step, const Broadcast& b, double unit) {
  if (trace.out == nullptr) return;
  const auto precision = trace.out->precision(17);
  *trace.out << "{\"step\":" << step << ",\"agent\":" << b.agent << ",\"chosen\":" << b.option << ",\"d\":" << unit
             << ",\"trades\":" << (b.trades ? "true" : "false") << "}\n";
  trace.out->precision(precision);
}

}  // namespace

NegotiationOutcome run_taco(std::span<const ChoiceId> choices, const CostLookup& cost,
                            std::span<const double> valuations, const TacoParams& params, const TraceSink& trace) {
  params.validate();
  const std::size_t n = valuations.size();
  const std::size_t m = choices.size();
  if (n == 0) throw std::invalid_argument("run_taco: no agents");
  if (m == 0) throw std::invalid_argument("run_taco: no choices");

  std::vector<AgentState> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(valuations[i] > 0.0) || !std::isfinite(valuations[i])) {
      throw std::invalid_argument("run_taco: valuation of agent " + std::to_string(i) + " must be positive");
    }
    AgentState a{valuations[i], std::vector<double>(m)};
    for (std::size_t j = 0; j < m; ++j) a.costs[j] = cost(i, choices[j]);
    agents.push_back(std::move(a));
  }

  TradingLedger ledger(n, m, params.initial_unit);
  LedgerHistory history(n, m);
  std::vector<std::optional<std::size_t>> last(n);
  std::vector<Broadcast> log;
  std::vector<std::size_t> log_steps;
  NegotiationOutcome out;
  std::vector<double> profits;
  std::size_t turn = 0;

  auto finish = [&](std::size_t option, Termination how) {
    out.agreed_option = option;
    out.agreed = choices[option];
    out.terminated_by = how;
    out.final_unit = ledger.unit();
    out.expenditures.resize(n);
    out.unit_counts.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = expenditure(ledger, i, option);
      out.expenditures[i] = e;
      out.unit_counts[i] = std::lround(std::max(0.0, e) / ledger.unit());
      if (e > 0.0) out.payers.push_back(i);
      if (e < 0.0) out.beneficiaries.push_back(i);
    }
    return out;
  };

  while (true) {
    if (out.steps >= params.max_steps) {
      throw SafetyCapError("TACo exceeded " + std::to_string(params.max_steps) + " steps", std::move(log));
    }
    const std::size_t step = ++out.steps;
    const std::size_t k = turn;
    turn = (turn + 1) % n;

    agents[k].profits(ledger, k, profits);
    const std::size_t choice = select_best(profits);

    bool others_agree = true;
    bool others_known = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      if (!last[i]) {
        others_known = false;
      } else if (*last[i] != choice) {
        others_agree = false;
      }
    }

    if (others_agree && others_known) {
      last[k] = choice;
      log.push_back(Broadcast{k, choice, false});
      emit(trace, step, log.back(), ledger.unit());
      return finish(choice, Termination::kUnanimity);
    }

    if (const auto since = history.observe(k, step)) {
      std::set<std::size_t> cycle{choice};
      for (std::size_t e = 0; e < log.size(); ++e) {
        if (log_steps[e] > *since) cycle.insert(log[e].option);
      }
      bool indifferent = true;
      std::vector<double> others;
      for (std::size_t i = 0; i < n && indifferent; ++i) {
        agents[i].profits(ledger, i, others);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t j : cycle) {
          lo = std::min(lo, others[j]);
          hi = std::max(hi, others[j]);
        }
        indifferent = hi - lo < params.indifference;
      }
      if (indifferent) return finish(*cycle.begin(), Termination::kIndifference);
      double unit = ledger.unit();
      reduce_unit(unit, params.reduction);
      ledger.set_unit(unit);
      history.clear();
      ++out.reductions;
      turn = 0;
      continue;
    }

    // The selector pays for its pick whenever a known broadcast disagrees;
    // with no conflict on record there is nobody to persuade.
    const bool trades = !others_agree;
    if (trades) {
      ledger.apply_selection(k, choice);
      history.record_trade(k, choice);
      ++out.trades;
      out.max_conservation_residual = std::max(out.max_conservation_residual, ledger.conservation_residual());
    }
    last[k] = choice;
    log.push_back(Broadcast{k, choice, trades});
    log_steps.push_back(step);
    emit(trace, step, log.back(), ledger.unit());
  }
}

}  // namespace nego::taco
