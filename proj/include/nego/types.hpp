#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nego {

/// Index into a finite, dense choice set.
struct ChoiceId {
  std::size_t index = 0;

  auto operator<=>(const ChoiceId&) const = default;
};

/// Intrinsic cost of every choice for every agent. Rows are choices, columns
/// are agents; storage is row-major so `row(o)` is the cost vector J^ind(o).
class CostTable {
 public:
  CostTable() = default;
  CostTable(std::size_t choices, std::size_t agents);
  CostTable(std::size_t choices, std::size_t agents, std::vector<double> values);

  static CostTable from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t choices() const { return choices_; }
  std::size_t agents() const { return agents_; }

  double operator()(ChoiceId choice, std::size_t agent) const {
    return values_[choice.index * agents_ + agent];
  }
  double& operator()(ChoiceId choice, std::size_t agent) {
    return values_[choice.index * agents_ + agent];
  }

  // Bounds-checked lookup; throws std::out_of_range.
  double at(ChoiceId choice, std::size_t agent) const;

  std::span<const double> row(ChoiceId choice) const {
    return {values_.data() + choice.index * agents_, agents_};
  }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const CostTable&, const CostTable&) = default;

 private:
  std::size_t choices_ = 0;
  std::size_t agents_ = 0;
  std::vector<double> values_;
};

/// Product space of per-component options (a CTOP bundle space, or a single
/// component of size m for explicit tables). Mixed-radix encoding with the
/// first component as the least significant digit.
class BundleSpace {
 public:
  BundleSpace() = default;
  explicit BundleSpace(std::vector<std::size_t> radices);

  static BundleSpace flat(std::size_t choices) { return BundleSpace({choices}); }

  const std::vector<std::size_t>& radices() const { return radices_; }
  std::size_t components() const { return radices_.size(); }
  // Total number of choices; throws std::overflow_error if it exceeds 64 bits.
  std::uint64_t size() const;

  ChoiceId encode(std::span<const std::size_t> digits) const;
  std::vector<std::size_t> decode(ChoiceId choice) const;

 private:
  std::vector<std::size_t> radices_;
};

}  // namespace nego
