#pragma once

// Trading auction for consensus. Agents take turns picking the option with the
// highest profit b_i(O_ij - P_ij) - C_ij; a selector that disagrees with the
// others pays n·d on its pick and every agent is offered d on it. Cycles shrink
// the trading unit until agents agree or become ε-indifferent.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nego/types.hpp"

namespace nego::taco {

struct TacoParams {
  double initial_unit = 1.0;     // d0, asset units
  double reduction = 0.5;        // γ in (0, 1)
  double indifference = 1e-3;    // ε, value units
  std::size_t max_steps = 1'000'000;

  void validate() const;
};

/// Public offer/payment units, computable by every agent from broadcasts.
class TradingLedger {
 public:
  TradingLedger(std::size_t agents, std::size_t options, double unit);

  std::size_t agents() const { return agents_; }
  std::size_t options() const { return options_; }
  double unit() const { return unit_; }
  void set_unit(double unit) { unit_ = unit; }

  double offer(std::size_t agent, std::size_t option) const { return offers_[agent * options_ + option]; }
  double payment(std::size_t agent, std::size_t option) const { return payments_[agent * options_ + option]; }

  /// The selector pays n·d on `option`; every agent's offer on it rises by d.
  void apply_selection(std::size_t selector, std::size_t option);

  /// max_j |Σ_i (P_ij - O_ij)|; zero up to rounding.
  double conservation_residual() const;

 private:
  std::size_t agents_;
  std::size_t options_;
  double unit_;
  std::vector<double> offers_;
  std::vector<double> payments_;
};

/// The only message agents exchange. Valuations and costs never appear here.
struct Broadcast {
  std::size_t agent = 0;
  std::size_t option = 0;
  bool trades = false;
};

enum class Termination { kUnanimity, kIndifference };

struct NegotiationOutcome {
  ChoiceId agreed;
  std::size_t agreed_option = 0;        // index into the negotiated choice list
  std::vector<double> expenditures;     // e_i = P_io - O_io, asset units
  std::vector<long> unit_counts;        // c_i = round(max(0, e_i) / final d)
  std::vector<std::size_t> payers;      // e_i > 0
  std::vector<std::size_t> beneficiaries;  // e_i < 0
  std::size_t steps = 0;
  std::size_t trades = 0;
  std::size_t reductions = 0;
  double final_unit = 0.0;
  double max_conservation_residual = 0.0;
  Termination terminated_by = Termination::kUnanimity;
};

class SafetyCapError : public std::runtime_error {
 public:
  SafetyCapError(const std::string& what, std::vector<Broadcast> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<Broadcast>& trace() const { return trace_; }

 private:
  std::vector<Broadcast> trace_;
};

double profit(double valuation, double offer, double payment, double cost);

/// Argmax with ties to the lowest index. Throws std::invalid_argument if empty.
std::size_t select_best(std::span<const double> profits);

void reduce_unit(double& unit, double reduction);

double expenditure(const TradingLedger& ledger, std::size_t agent, std::size_t option);

/// Per-agent record of profit vectors seen during the current trading-unit
/// epoch. Vectors are compared after subtracting their maximum, since only
/// relative profit drives a selection.
class CycleDetector {
 public:
  explicit CycleDetector(std::size_t agents) : seen_(agents) {}

  /// Step index of the earlier matching observation, or nullopt after
  /// recording this one.
  std::optional<std::size_t> observe(std::size_t agent, std::span<const double> profits, std::size_t step,
                                     double scale = 1.0);
  void clear();

 private:
  struct Entry {
    std::vector<double> relative;
    std::size_t step;
  };
  std::vector<std::vector<Entry>> seen_;
};

/// Public-ledger state history for one trading-unit epoch. Trades are counted
/// in units of the current d, so states compare exactly. Each agent's row is
/// taken relative to its first entry: a uniform shift of one agent's net
/// positions leaves its selection unchanged. A repeated (turn, state) pair
/// means every agent observes the profit vector it saw before.
class LedgerHistory {
 public:
  LedgerHistory(std::size_t agents, std::size_t options);

  void record_trade(std::size_t selector, std::size_t option);
  /// Step of the earlier visit of this state on this agent's turn, or nullopt
  /// after recording it.
  std::optional<std::size_t> observe(std::size_t agent, std::size_t step);
  void clear();

 private:
  std::size_t agents_;
  std::size_t options_;
  std::vector<long long> counts_;
  std::map<std::vector<long long>, std::size_t> seen_;
};

/// Cost of option `option` (index into `choices`) for `agent`.
using CostLookup = std::function<double(std::size_t agent, ChoiceId choice)>;

struct TraceSink {
  std::ostream* out = nullptr;  // JSON lines: {step, agent, chosen, d, trades}
};

/// Unanimity when the selector's pick matches every other agent's last
/// broadcast. A ledger state revisited on the same turn is a cycle: if every
/// agent's profit gap over the options broadcast in the cycle is below ε, the
/// lowest of them is agreed, otherwise d shrinks by γ. Throws SafetyCapError
/// after max_steps.
NegotiationOutcome run_taco(std::span<const ChoiceId> choices, const CostLookup& cost,
                            std::span<const double> valuations, const TacoParams& params,
                            const TraceSink& trace = {});

}  // namespace nego::taco
