#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nego/analysis.hpp"
#include "nego/rng.hpp"

using namespace nego;
using namespace nego::analysis;

namespace {

const CostTable kSmall = CostTable::from_rows({{1, 2}, {3, 4}});

}  // namespace

TEST_CASE("b_max of small tables") {
  const CostSpread s = b_max(kSmall);
  CHECK(s.per_agent == std::vector<double>{2, 2});
  CHECK(s.b_max == 2);
  const CostSpread c = b_max(CostTable::from_rows({{5, 1}, {5, 4}, {5, 0}}));
  CHECK(c.per_agent[0] == 0);
  CHECK(c.b_max == 4);
}

TEST_CASE("b_max on a ctop instance matches a pairwise loop over all bundles") {
  const ctop::CtopInstance inst = ctop::generate_scenario({}, 12);
  const BundleSpace space = inst.bundle_space();
  REQUIRE(space.size() == 243);
  std::vector<std::vector<double>> costs(3);
  for (std::uint64_t c = 0; c < space.size(); ++c) {
    const auto bundle = space.decode(ChoiceId{c});
    for (std::size_t s = 0; s < 3; ++s) costs[s].push_back(ctop::sector_cost(inst, s, bundle));
  }
  double expected = 0;
  for (const auto& col : costs) {
    for (double a : col) {
      for (double b : col) expected = std::max(expected, std::abs(a - b));
    }
  }
  CHECK(b_max(Scenario::from_ctop(inst).require_table()).b_max == expected);
}

TEST_CASE("round bound") {
  CHECK(round_bound(2, 3) == 6);
  CHECK(round_bound(0.1, 3) == 1);
  CHECK(round_bound(2, 2) == 4);
  CHECK(round_bound(5, 0) == 1);
}

TEST_CASE("kappa for a target round count") {
  CHECK(kappa_for_rounds(5, 2) == 2.5);
  CHECK(kappa_for_rounds(1, 10) == doctest::Approx(0.1));
  CHECK(std::isinf(kappa_for_rounds(3, 0)));
  CHECK_THROWS_AS(kappa_for_rounds(0, 1), std::invalid_argument);
  for (std::size_t r = 1; r <= 40; ++r) {
    for (double b : {0.003, 0.1, 0.7, 1.0, 2.5, 3.3, 17.0, 123.456}) {
      CHECK(round_bound(kappa_for_rounds(r, b), b) <= r);
    }
  }
}

TEST_CASE("gap bound") {
  CHECK(gap_bound(3, 2, 0, 1e300) == doctest::Approx(0));
  CHECK(gap_bound(3, 2, 1.0 / 3, 2) == doctest::Approx(5));
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha = 1; alpha < 50; alpha += 1.5) {
    const double g = gap_bound(4, 3, 0.2, alpha);
    CHECK(g <= prev);
    prev = g;
  }
}

TEST_CASE("kappa for a target gap") {
  CHECK(kappa_for_gap(3, 1, 5) == 3);
  CHECK_THROWS_AS(kappa_for_gap(3, 1, 4), InfeasibleTarget);
  CHECK(kappa_for_gap(1, 1, 0.5) == 2);
  CHECK(kappa_for_gap(3, 0, 1) == 0);
}

TEST_CASE("misalignment") {
  CHECK(misalignment(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == doctest::Approx(0).epsilon(1e-15));
  CHECK(misalignment(std::vector<double>{1, 0, 0}) == doctest::Approx(4.0 / 3));
  CHECK(sigma_max(3) == doctest::Approx(4.0 / 3));
  CHECK(delta_misalignment(std::vector<double>{0, 0, 0}) == doctest::Approx(1));
  CHECK_THROWS_AS(delta_misalignment(std::vector<double>{}), std::invalid_argument);
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> w(2 + rng.below(5));
    for (double& x : w) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 50);
    CHECK(delta_misalignment(w) <= sigma_max(w.size()) + 1e-12);
  }
}

TEST_CASE("system cost and optimum") {
  CHECK(system_cost(kSmall, ChoiceId{0}) == 3);
  CHECK(system_cost(kSmall, ChoiceId{1}) == 7);
  CHECK(system_cost(kSmall, ChoiceId{1}) == 2 * (0.5 * 3 + 0.5 * 4));
  CHECK_THROWS_AS(system_cost(kSmall, ChoiceId{2}), std::out_of_range);
  const Optimum o = system_optimum(kSmall);
  CHECK(o.choice.index == 0);
  CHECK(o.value == 3);
  const Optimum flat = system_optimum(CostTable::from_rows({{2, 2, 2}, {2, 2, 2}}));
  CHECK(flat.choice.index == 0);
  CHECK(flat.value == 6);
}

TEST_CASE("system optimum on a ctop instance matches direct enumeration") {
  const ctop::CtopInstance inst = ctop::generate_scenario({}, 31);
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0, index = 0;
  // Nested loops over options, flight 0 varying fastest.
  for (std::size_t f4 = 0; f4 < 3; ++f4)
    for (std::size_t f3 = 0; f3 < 3; ++f3)
      for (std::size_t f2 = 0; f2 < 3; ++f2)
        for (std::size_t f1 = 0; f1 < 3; ++f1)
          for (std::size_t f0 = 0; f0 < 3; ++f0, ++index) {
            const ctop::Bundle bundle{f0, f1, f2, f3, f4};
            double total = 0;
            for (std::size_t s = 0; s < 3; ++s) total += ctop::sector_cost(inst, s, bundle);
            if (total < best) {
              best = total;
              arg = index;
            }
          }
  const Optimum o = system_optimum(Scenario::from_ctop(inst).require_table());
  CHECK(o.choice.index == arg);
  CHECK(o.value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("selection error") {
  const CostTable t = CostTable::from_rows({{4, 0}, {1, 2}, {3, 3}});
  const std::vector<double> w{1, 1};
  // Normalized scores with α = 3: 4/3, 1 and 2.
  const SelectionError best = selection_error(w, t, ChoiceId{1});
  CHECK(best.eta == 0);
  CHECK(best.reference.index == 1);
  const SelectionError worse = selection_error(w, t, ChoiceId{2});
  CHECK(worse.eta == doctest::Approx(1.0));
  CHECK(selection_error(std::vector<double>{0, 0}, t, ChoiceId{0}).eta == 0);
}

TEST_CASE("gini index") {
  CHECK(gini(std::vector<double>{1, 1, 1}) == 0);
  CHECK(gini(std::vector<double>{0, 1}) == 0.5);
  CHECK(gini(std::vector<double>{7}) == 0);
  CHECK(gini(std::vector<double>{0, 0}) == 0);
  // A negative entry shifts the vector to start at zero: (-1, 0) behaves as (0, 1).
  CHECK(gini_needs_shift(std::vector<double>{-1, 0}));
  CHECK(gini(std::vector<double>{-1, 0}) == 0.5);
  CHECK_THROWS_AS(gini(std::vector<double>{}), std::invalid_argument);
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> x(1 + rng.below(6));
    for (double& v : x) v = rng.uniform(0, 10);
    const double g = gini(x);
    CHECK(g >= 0);
    CHECK(g <= 1 - 1.0 / static_cast<double>(x.size()) + 1e-12);
  }
}

TEST_CASE("bound verification on oversight runs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scenario s = Scenario::from_ctop(ctop::generate_scenario({}, seed));
    Rng rng(seed);
    const Reserves reserves{rng.uniform(1, 20), rng.uniform(1, 20), rng.uniform(1, 20)};
    OversightParams params;
    params.kappa = std::pow(10.0, rng.uniform(-1, 2));
    const RunRecord r = run_oversight(s, reserves, params, seed);
    const BoundReport rep = verify_bounds(r, s.require_table(), params.kappa);
    CHECK_FALSE(rep.any_violation());
    CHECK(rep.r_term == r.r_term);
    CHECK(rep.rounds.size() == r.rounds.size());
    for (const RoundBounds& rb : rep.rounds) {
      CHECK(rb.delta <= rep.sigma_max + 1e-12);
      CHECK(rb.eta <= rb.eta_bound + 1e-9);
    }
    CHECK(rep.gap <= rep.gap_bound + 1e-9);
    CHECK(rep.lines().size() == 8);
  }
}

TEST_CASE("single-round runs satisfy the termination bound") {
  const Scenario s = Scenario::from_table(kSmall);
  OversightParams params;
  params.kappa = 0.01;
  const RunRecord r = run_oversight(s, {1, 1}, params, 0);
  const BoundReport rep = verify_bounds(r, s.require_table(), params.kappa);
  CHECK(rep.r_term == 1);
  CHECK(rep.round_bound >= 1);
  CHECK(rep.termination_violations == 0);
}

TEST_CASE("tampered records are flagged") {
  const CostTable t = CostTable::from_rows({{0, 10, 10}, {10, 0, 10}, {10, 10, 0}});
  const Scenario s = Scenario::from_table(t);
  OversightParams params;
  params.kappa = 0.05;
  RunRecord r = run_oversight(s, {1, 1, 1}, params, 0);
  REQUIRE_FALSE(verify_bounds(r, t, params.kappa).any_violation());

  RunRecord late = r;
  late.rounds.push_back(late.rounds.back());
  late.rounds.back().round = 2;
  late.rounds.back().alpha = 2;
  const BoundReport rep = verify_bounds(late, t, params.kappa);
  CHECK(rep.termination_violations == 1);
  CHECK(rep.any_violation());

  RunRecord over = r;
  over.rounds.back().expenditures[0] = 5;
  CHECK(verify_bounds(over, t, params.kappa).feasibility_violations == 1);

  RunRecord leaky = r;
  leaky.rounds.back().conservation_residual = 1e-3;
  CHECK(verify_bounds(leaky, t, params.kappa).conservation_violations == 1);
}

TEST_CASE("kappa guides") {
  const CostTable t = CostTable::from_rows({{0, 10}, {10, 0}});
  const Scenario s = Scenario::from_table(t);
  OversightParams params;
  params.kappa = 0.3;
  const RunRecord r = run_oversight(s, {1, 1}, params, 0);
  const BoundReport rep = verify_bounds(r, t, params.kappa, {std::size_t{4}, 25.0});
  CHECK(rep.kappa_max_for_rounds == doctest::Approx(0.4));
  REQUIRE(rep.kappa_min_for_gap);
  CHECK(*rep.kappa_min_for_gap == doctest::Approx(std::floor(20.0 / 5.0) / 10.0));
  const BoundReport infeasible = verify_bounds(r, t, params.kappa, {std::nullopt, 20.0});
  CHECK_FALSE(infeasible.kappa_min_for_gap);
  CHECK(to_json_string(rep).find("\"kappa_min_for_gap\"") != std::string::npos);
}
