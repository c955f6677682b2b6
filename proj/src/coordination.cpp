#include "nego/coordination.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace nego {

CoordinationState::CoordinationState(std::size_t agents) : weights_(agents, 0.0) {}

CoordinationState::CoordinationState(std::vector<double> weights, std::size_t round)
    : weights_(std::move(weights)), round_(round) {
  double l1 = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("coordination weights must be nonnegative");
    l1 += w;
  }
  alpha_ = l1 + 1.0;
}

std::vector<double> CoordinationState::normalized() const {
  std::vector<double> out(weights_);
  for (double& w : out) w /= alpha_;
  return out;
}

CoordinationState CoordinationState::updated(std::span<const double> shortfalls) const {
  if (shortfalls.size() != weights_.size()) {
    throw std::invalid_argument("update_coordination: expected " + std::to_string(weights_.size()) +
                                " shortfalls, got " + std::to_string(shortfalls.size()));
  }
  const double total = std::accumulate(shortfalls.begin(), shortfalls.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("update_coordination: total shortfall must be positive");
  CoordinationState next(*this);
  for (std::size_t i = 0; i < weights_.size(); ++i) next.weights_[i] += shortfalls[i] / total;
  next.alpha_ = alpha_ + 1.0;
  next.round_ = round_ + 1;
  return next;
}

double shared_score(std::span<const double> weights, std::span<const double> costs) {
  if (weights.size() != costs.size()) {
    throw std::invalid_argument("shared_score: " + std::to_string(weights.size()) + " weights vs " +
                                std::to_string(costs.size()) + " costs");
  }
  return std::inner_product(weights.begin(), weights.end(), costs.begin(), 0.0);
}

double effective_cost(const CoordinationState& state, std::size_t agent, std::span<const double> costs) {
  if (agent >= costs.size()) throw std::out_of_range("effective_cost: agent out of range");
  return (shared_score(state.weights(), costs) + costs[agent]) / state.alpha();
}

}  // namespace nego
