#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nego {

/// Coordination factor w broadcast by the oversight, with its normalization
/// α = ‖w‖₁ + 1. α is tracked alongside w so that it advances by exactly one
/// per update rather than accumulating rounding from the ℓ1 sum.
class CoordinationState {
 public:
  explicit CoordinationState(std::size_t agents);
  CoordinationState(std::vector<double> weights, std::size_t round);

  const std::vector<double>& weights() const { return weights_; }
  std::size_t agents() const { return weights_.size(); }
  std::size_t round() const { return round_; }
  double alpha() const { return alpha_; }

  /// w̄ = w / α.
  std::vector<double> normalized() const;

  /// w' = w + s/Σs, α' = α + 1, r' = r + 1. Throws std::invalid_argument when
  /// Σs is not positive or the dimension differs.
  CoordinationState updated(std::span<const double> shortfalls) const;

 private:
  std::vector<double> weights_;
  std::size_t round_ = 1;
  double alpha_ = 1.0;
};

/// S_w(o) = wᵀ J^ind(o). Throws std::invalid_argument on dimension mismatch.
double shared_score(std::span<const double> weights, std::span<const double> costs);

/// S_w̄(o) + J_i^ind(o)/α.
double effective_cost(const CoordinationState& state, std::size_t agent, std::span<const double> costs);

inline CoordinationState update_coordination(const CoordinationState& state, std::span<const double> shortfalls) {
  return state.updated(shortfalls);
}

}  // namespace nego
