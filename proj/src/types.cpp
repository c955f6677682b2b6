#include "nego/types.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace nego {

CostTable::CostTable(std::size_t choices, std::size_t agents)
    : choices_(choices), agents_(agents), values_(choices * agents, 0.0) {}

CostTable::CostTable(std::size_t choices, std::size_t agents, std::vector<double> values)
    : choices_(choices), agents_(agents), values_(std::move(values)) {
  if (values_.size() != choices * agents) {
    throw std::invalid_argument("CostTable: expected " + std::to_string(choices * agents) + " values, got " +
                                std::to_string(values_.size()));
  }
}

CostTable CostTable::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t agents = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * agents);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != agents) {
      throw std::invalid_argument("CostTable: row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                                  " entries, expected " + std::to_string(agents));
    }
    values.insert(values.end(), rows[r].begin(), rows[r].end());
  }
  return CostTable(rows.size(), agents, std::move(values));
}

double CostTable::at(ChoiceId choice, std::size_t agent) const {
  if (choice.index >= choices_) {
    throw std::out_of_range("choice " + std::to_string(choice.index) + " out of range [0, " +
                            std::to_string(choices_) + ")");
  }
  if (agent >= agents_) {
    throw std::out_of_range("agent " + std::to_string(agent) + " out of range [0, " + std::to_string(agents_) + ")");
  }
  return (*this)(choice, agent);
}

BundleSpace::BundleSpace(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
  for (std::size_t r : radices_) {
    if (r == 0) throw std::invalid_argument("BundleSpace: every component needs at least one option");
  }
}

std::uint64_t BundleSpace::size() const {
  std::uint64_t total = 1;
  for (std::size_t r : radices_) {
    if (total > std::numeric_limits<std::uint64_t>::max() / r) {
      throw std::overflow_error("bundle space exceeds 64-bit choice indices");
    }
    total *= r;
  }
  return total;
}

ChoiceId BundleSpace::encode(std::span<const std::size_t> digits) const {
  if (digits.size() != radices_.size()) throw std::invalid_argument("BundleSpace::encode: wrong bundle length");
  std::uint64_t index = 0;
  for (std::size_t k = radices_.size(); k-- > 0;) {
    if (digits[k] >= radices_[k]) {
      throw std::out_of_range("bundle entry " + std::to_string(k) + " = " + std::to_string(digits[k]) +
                              " exceeds option count " + std::to_string(radices_[k]));
    }
    index = index * radices_[k] + digits[k];
  }
  return ChoiceId{static_cast<std::size_t>(index)};
}

std::vector<std::size_t> BundleSpace::decode(ChoiceId choice) const {
  std::vector<std::size_t> digits(radices_.size());
  std::uint64_t rest = choice.index;
  for (std::size_t k = 0; k < radices_.size(); ++k) {
    digits[k] = static_cast<std::size_t>(rest % radices_[k]);
    rest /= radices_[k];
  }
  if (rest != 0) throw std::out_of_range("choice " + std::to_string(choice.index) + " outside bundle space");
  return digits;
}

}  // namespace nego
