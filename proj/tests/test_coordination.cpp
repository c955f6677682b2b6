#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nego/coordination.hpp"

using namespace nego;

TEST_CASE("shared score is the weighted cost sum") {
  CHECK(shared_score(std::vector<double>{0, 0}, std::vector<double>{9, 4}) == 0);
  CHECK(shared_score(std::vector<double>{1, 1}, std::vector<double>{2, 3}) == 5);
  CHECK(shared_score(std::vector<double>{0.5, 0.25}, std::vector<double>{4, 8}) == 4);
  CHECK_THROWS_AS(shared_score(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("effective cost") {
  CHECK(effective_cost(CoordinationState(2), 0, std::vector<double>{7, 2}) == 7);
  const CoordinationState state({1, 0, 0}, 2);
  CHECK(state.alpha() == 2);
  CHECK(effective_cost(state, 1, std::vector<double>{4, 6, 8}) == 5);
}

TEST_CASE("effective costs converge when shared scores match") {
  // Choices a and b share the score 5 under direction (1, 1) but differ for agent 0.
  const std::vector<double> a{2, 3}, b{4, 1};
  double previous = 1e300;
  for (double scale : {10.0, 100.0, 1000.0}) {
    const CoordinationState state({scale / 2, scale / 2}, 1);
    const double diff = std::abs(effective_cost(state, 0, a) - effective_cost(state, 0, b));
    CHECK(diff == doctest::Approx(2.0 / (scale + 1)));
    CHECK(diff < previous);
    previous = diff;
  }
}

TEST_CASE("coordination update adds normalized shortfalls") {
  const CoordinationState s0(3);
  CHECK(s0.alpha() == 1);
  CHECK(s0.round() == 1);
  const CoordinationState s1 = update_coordination(s0, std::vector<double>{2, 0, 2});
  CHECK(s1.weights() == std::vector<double>{0.5, 0, 0.5});
  CHECK(s1.alpha() == 2);
  CHECK(s1.round() == 2);
  const CoordinationState s2 = update_coordination(s1, std::vector<double>{0, 1, 0});
  CHECK(s2.weights() == std::vector<double>{0.5, 1, 0.5});
  CHECK(s2.alpha() == 3);
  CHECK(s2.normalized() == std::vector<double>{0.5 / 3, 1.0 / 3, 0.5 / 3});
}

TEST_CASE("every update grows the l1 norm by exactly one") {
  CoordinationState state(4);
  const std::vector<std::vector<double>> shortfalls{{0.3, 0, 0, 0.1}, {1e-9, 7, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 3}};
  for (std::size_t r = 0; r < shortfalls.size(); ++r) {
    const CoordinationState next = state.updated(shortfalls[r]);
    double l1 = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(next.weights()[i] >= state.weights()[i]);
      l1 += next.weights()[i];
    }
    CHECK(l1 == doctest::Approx(static_cast<double>(r + 1)).epsilon(1e-12));
    CHECK(next.alpha() == static_cast<double>(r + 2));
    state = next;
  }
}

TEST_CASE("update requires positive total shortfall and matching dimension") {
  const CoordinationState s(2);
  CHECK_THROWS_AS(s.updated(std::vector<double>{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(s.updated(std::vector<double>{1}), std::invalid_argument);
  CHECK_THROWS_AS(CoordinationState({-1, 0}, 1), std::invalid_argument);
}
