#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nego/candidates.hpp"
#include "nego/rng.hpp"

using namespace nego;

namespace {

Objective table_objective(const std::vector<double>& values) {
  return [&values](ChoiceId c) { return values[c.index]; };
}

// Brute-force oracle over the decoded bundle space.
Minimum brute_force(const Objective& f, const BundleSpace& space) {
  Minimum best{ChoiceId{0}, f(ChoiceId{0})};
  for (std::uint64_t c = 1; c < space.size(); ++c) {
    const double v = f(ChoiceId{c});
    if (v < best.value) best = {ChoiceId{c}, v};
  }
  return best;
}

CoordinationState random_state(Rng& rng, std::size_t agents) {
  std::vector<double> w(agents);
  for (double& x : w) x = rng.uniform(0.0, 3.0);
  return CoordinationState(std::move(w), 1 + rng.below(4));
}

}  // namespace

TEST_CASE("exhaustive minimum with lowest-index ties") {
  const std::vector<double> a{3, 1, 2}, b{4, 4, 4}, c{7};
  const Minimum ma = exhaustive_min(table_objective(a), 3);
  CHECK(ma.choice.index == 1);
  CHECK(ma.value == 1);
  const Minimum mb = exhaustive_min(table_objective(b), 3);
  CHECK(mb.choice.index == 0);
  CHECK(mb.value == 4);
  CHECK(exhaustive_min(table_objective(c), 1).choice.index == 0);
  CHECK_THROWS_AS(exhaustive_min(table_objective(c), 0), std::invalid_argument);
}

TEST_CASE("local search on a single component is exact") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> values(2 + rng.below(8));
    for (double& v : values) v = rng.uniform(-5, 5);
    const BundleSpace space({values.size()});
    SolverConfig config;
    config.restarts = 1;
    config.seed = static_cast<std::uint64_t>(t);
    CHECK(local_search_min(table_objective(values), space, config).value ==
          brute_force(table_objective(values), space).value);
  }
}

TEST_CASE("local search is exact on separable objectives") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t flights = 1 + rng.below(5);
    std::vector<std::size_t> radices(flights);
    std::vector<std::vector<double>> terms(flights);
    for (std::size_t f = 0; f < flights; ++f) {
      radices[f] = 1 + rng.below(4);
      for (std::size_t o = 0; o < radices[f]; ++o) terms[f].push_back(rng.uniform(0, 10));
    }
    const BundleSpace space(radices);
    const Objective f = [&](ChoiceId c) {
      const auto digits = space.decode(c);
      double s = 0;
      for (std::size_t k = 0; k < flights; ++k) s += terms[k][digits[k]];
      return s;
    };
    SolverConfig config;
    config.restarts = 1;
    config.seed = static_cast<std::uint64_t>(t);
    CHECK(local_search_min(f, space, config).value == doctest::Approx(brute_force(f, space).value).epsilon(1e-12));
  }
}

TEST_CASE("local search stays close to the optimum on coupled ctop costs") {
  std::size_t close = 0;
  Rng rng(4);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scenario s = Scenario::from_ctop(ctop::generate_scenario({3, 5, 5, 4, 8}, seed));
    const CoordinationState state = random_state(rng, 3);
    const Objective f = [&](ChoiceId c) { return effective_cost(state, 0, s.table()->row(c)); };
    SolverConfig config;
    config.kind = SolverKind::kLocalSearch;
    config.restarts = 30;
    config.seed = seed;
    const double local = local_search_min(f, s.space(), config).value;
    const double exact = brute_force(f, s.space()).value;
    CHECK(local >= exact);
    if (local <= exact + 0.05 * std::abs(exact)) ++close;
  }
  MESSAGE("within 5%: " << close << "/100");
  CHECK(close >= 90);
}

TEST_CASE("zero coordination returns the agent's own argmin") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{5, 1}, {2, 9}, {3, 0}}));
  const CoordinationState state(2);
  CHECK(generate_candidate(0, state, s, {}).index == 1);
  CHECK(generate_candidate(1, state, s, {}).index == 2);
}

TEST_CASE("equal shared scores leave the agent's own cost to decide") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{1, 5}, {9, 5}}));
  const CoordinationState state({0, 1}, 2);
  CHECK(generate_candidate(0, state, s, {}).index == 0);
}

TEST_CASE("candidate argmin matches the unnormalized objective") {
  Rng rng(6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = Scenario::from_ctop(ctop::generate_scenario({}, seed));
    const CoordinationState state = random_state(rng, 3);
    for (std::size_t agent = 0; agent < 3; ++agent) {
      const Objective raw = [&](ChoiceId c) {
        const auto row = s.table()->row(c);
        return shared_score(state.weights(), row) + row[agent];
      };
      const ChoiceId expected = brute_force(raw, s.space()).choice;
      CHECK(generate_candidate(agent, state, s, {}) == expected);
    }
  }
}

TEST_CASE("local-search candidates match exhaustive on small bundle spaces") {
  std::size_t matched = 0;
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scenario s = Scenario::from_ctop(ctop::generate_scenario({3, 3, 3, 4, 8}, seed));
    const CoordinationState state = random_state(rng, 3);
    SolverConfig config;
    config.kind = SolverKind::kLocalSearch;
    config.restarts = 20;
    config.seed = seed;
    const std::size_t agent = seed % 3;
    const ChoiceId local = generate_candidate(agent, state, s, config);
    const ChoiceId exact = generate_candidate(agent, state, s, {});
    const auto cost = [&](ChoiceId c) { return effective_cost(state, agent, s.table()->row(c)); };
    if (cost(local) == cost(exact)) ++matched;
  }
  MESSAGE("exact matches: " << matched << "/100");
  CHECK(matched >= 95);
}

TEST_CASE("candidates are reproducible for a fixed seed") {
  const Scenario s = Scenario::from_ctop(ctop::generate_scenario({3, 5, 3, 4, 8}, 17));
  const CoordinationState state({0.2, 0.5, 0.1}, 2);
  SolverConfig config;
  config.kind = SolverKind::kLocalSearch;
  config.restarts = 3;
  config.seed = 99;
  for (std::size_t a = 0; a < 3; ++a) CHECK(generate_candidate(a, state, s, config) == generate_candidate(a, state, s, config));
}

TEST_CASE("exhaustive search refuses oversized spaces") {
  const Scenario s = Scenario::from_ctop(ctop::generate_scenario({}, 1));
  SolverConfig config;
  config.exhaustive_limit = 100;
  CHECK_THROWS_WITH_AS(generate_candidate(0, CoordinationState(3), s, config), doctest::Contains("local-search"),
                       SearchSpaceTooLarge);
  CHECK_THROWS_AS(generate_candidate(3, CoordinationState(3), s, {}), std::out_of_range);
}

TEST_CASE("solver kind names") {
  CHECK(solver_kind_from_string("exhaustive") == SolverKind::kExhaustive);
  CHECK(solver_kind_from_string("local-search") == SolverKind::kLocalSearch);
  CHECK(to_string(SolverKind::kLocalSearch) == "local-search");
  CHECK_THROWS_AS(solver_kind_from_string("ga"), std::invalid_argument);
}
