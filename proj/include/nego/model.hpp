#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nego/ctop.hpp"
#include "nego/types.hpp"

namespace nego {

/// Per-agent asset reserve R_i; must be strictly positive.
using Reserves = std::vector<double>;

/// Largest choice space that is materialized into a CostTable.
inline constexpr std::uint64_t kMaterializeLimit = 1'000'000;

/// A negotiation problem: either an explicit cost table or a CTOP instance
/// whose agents are its sectors. Immutable once built; CTOP scenarios with an
/// enumerable bundle space carry a precomputed table.
class Scenario {
 public:
  static Scenario from_table(CostTable table, std::vector<std::string> labels = {});
  static Scenario from_ctop(ctop::CtopInstance instance);

  std::size_t agents() const { return agents_; }
  std::uint64_t choices() const { return choices_; }

  bool is_ctop() const { return ctop_ != nullptr; }
  const ctop::CtopInstance* ctop() const { return ctop_.get(); }
  const BundleSpace& space() const { return space_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Null when the choice space is too large to enumerate.
  const CostTable* table() const { return table_.get(); }
  // Throws std::length_error when no table is available.
  const CostTable& require_table() const;

  // Unchecked J_i^ind(o); callers validate indices.
  double cost(std::size_t agent, ChoiceId choice) const;

 private:
  std::size_t agents_ = 0;
  std::uint64_t choices_ = 0;
  BundleSpace space_;
  std::shared_ptr<const CostTable> table_;
  std::shared_ptr<const ctop::CtopInstance> ctop_;
  std::vector<std::string> labels_;
};

/// J_i^ind(o). Throws std::out_of_range for a bad agent or choice.
double individual_cost(const Scenario& scenario, std::size_t agent, ChoiceId choice);

/// Every problem found; empty iff the scenario is usable.
std::vector<std::string> validate_scenario(const Scenario& scenario);

/// Throws std::invalid_argument unless reserves has one strictly positive,
/// finite entry per agent.
void check_reserves(std::span<const double> reserves, std::size_t agents);

/// Reads either `{ "agents", "choices", "costs" }` or a CTOP instance file.
Scenario load_scenario(const std::filesystem::path& path);
Scenario scenario_from_json_string(const std::string& text);
std::string table_to_json_string(const CostTable& table);

}  // namespace nego
