#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "nego/oversight.hpp"
#include "nego/rng.hpp"

using namespace nego;

namespace {

double brute_b_max(const CostTable& t) {
  double best = 0;
  for (std::size_t a = 0; a < t.agents(); ++a) {
    for (std::size_t c = 0; c < t.choices(); ++c) {
      for (std::size_t d = 0; d < t.choices(); ++d) best = std::max(best, t(ChoiceId{c}, a) - t(ChoiceId{d}, a));
    }
  }
  return best;
}

// Each agent's favourite choice costs the others 10.
const CostTable kConflict = CostTable::from_rows({{0, 10, 10}, {10, 0, 10}, {10, 10, 0}});

void check_record_invariants(const RunRecord& r, const Reserves& reserves) {
  REQUIRE(r.completed);
  REQUIRE(r.r_term == r.rounds.size());
  for (std::size_t k = 0; k < r.rounds.size(); ++k) {
    const RoundEntry& e = r.rounds[k];
    CHECK(e.round == k + 1);
    CHECK(e.alpha == static_cast<double>(k + 1));
    if (k > 0) {
      for (std::size_t i = 0; i < e.weights.size(); ++i) CHECK(e.weights[i] >= r.rounds[k - 1].weights[i]);
    }
    CHECK(std::is_sorted(e.pool.begin(), e.pool.end()));
    CHECK(std::adjacent_find(e.pool.begin(), e.pool.end()) == e.pool.end());
  }
  const RoundEntry& last = r.rounds.back();
  CHECK(last.total_shortfall == 0);
  for (std::size_t i = 0; i < reserves.size(); ++i) CHECK(last.expenditures[i] <= reserves[i]);
}

}  // namespace

TEST_CASE("asset valuation") {
  CHECK(asset_valuation(1, 1) == 1);
  CHECK(asset_valuation(10, 20) == doctest::Approx(0.005));
  CHECK(asset_valuation(0.1, 1) == doctest::Approx(10));
  CHECK_THROWS_AS(asset_valuation(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(asset_valuation(1, -1), std::invalid_argument);
}

TEST_CASE("shortfall") {
  CHECK(shortfall(5, 10) == 0);
  CHECK(shortfall(15, 10) == 0.5);
  CHECK(shortfall(-3, 1) == 0);
  CHECK_THROWS_AS(shortfall(1, 0), std::invalid_argument);
}

TEST_CASE("shared favourite terminates in one round without trading") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{0, 1, 2}, {5, 6, 7}, {3, 3, 3}}));
  const Reserves reserves{1, 1, 1};
  const RunRecord r = run_oversight(s, reserves, {}, 1);
  check_record_invariants(r, reserves);
  CHECK(r.r_term == 1);
  CHECK(r.agreed.index == 0);
  CHECK(r.rounds[0].expenditures == std::vector<double>{0, 0, 0});
}

TEST_CASE("kappa below 1/B_max terminates in round one") {
  const Scenario s = Scenario::from_table(kConflict);
  const double b = brute_b_max(kConflict);
  OversightParams params;
  params.kappa = 0.5 / b;
  const Reserves reserves{1, 2, 3};
  const RunRecord r = run_oversight(s, reserves, params, 5);
  CHECK(r.round_bound == 1);
  CHECK(r.b_max == b);
  check_record_invariants(r, reserves);
  CHECK(r.r_term == 1);
}

TEST_CASE("conflicting agents finish within the round bound") {
  const Scenario s = Scenario::from_table(kConflict);
  const double b = brute_b_max(kConflict);
  OversightParams params;
  params.kappa = 5.0 / b;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Reserves reserves{rng.uniform(1, 20), rng.uniform(1, 20), rng.uniform(1, 20)};
    const RunRecord r = run_oversight(s, reserves, params, seed);
    check_record_invariants(r, reserves);
    CHECK(r.r_term <= 5);
  }
}

TEST_CASE("random tables respect the round bound and record invariants") {
  std::size_t multi = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(derive_seed(seed, {0x0b5}));
    const std::size_t n = 2 + rng.below(3);
    const std::size_t m = 2 + rng.below(6);
    CostTable t(m, n);
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t a = 0; a < n; ++a) t(ChoiceId{c}, a) = rng.uniform(0, 10);
    }
    Reserves reserves(n);
    for (double& x : reserves) x = rng.uniform(1, 20);
    OversightParams params;
    params.kappa = std::pow(10.0, rng.uniform(-1, 2));
    const RunRecord r = run_oversight(Scenario::from_table(t), reserves, params, seed);
    check_record_invariants(r, reserves);
    const auto bound = std::max(1.0, std::ceil(params.kappa * brute_b_max(t)));
    CHECK(static_cast<double>(r.r_term) <= bound);
    multi += r.r_term > 1;
  }
  MESSAGE("multi-round runs: " << multi);
}

TEST_CASE("runs are reproducible") {
  const Scenario s = Scenario::from_ctop(ctop::generate_scenario({}, 4));
  const Reserves reserves{1, 5, 10};
  OversightParams params;
  params.kappa = 3;
  CHECK(to_json_string(run_oversight(s, reserves, params, 8)) == to_json_string(run_oversight(s, reserves, params, 8)));
}

TEST_CASE("round cap raises with the partial record") {
  const Scenario s = Scenario::from_table(kConflict);
  OversightParams params;
  params.kappa = 100;
  params.max_rounds = 1;
  const Reserves reserves{1e-3, 1e-3, 1e-3};
  try {
    run_oversight(s, reserves, params, 0);
    FAIL("expected OversightCapError");
  } catch (const OversightCapError& e) {
    CHECK(e.partial().rounds.size() == 1);
    CHECK_FALSE(e.partial().completed);
    CHECK(e.partial().rounds[0].total_shortfall > 0);
  }
}

TEST_CASE("invalid inputs are rejected") {
  const Scenario s = Scenario::from_table(kConflict);
  CHECK_THROWS_AS(run_oversight(s, {1, 1}, {}, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_oversight(s, {1, 0, 1}, {}, 0), std::invalid_argument);
  OversightParams bad;
  bad.kappa = 0;
  CHECK_THROWS_AS(run_oversight(s, {1, 1, 1}, bad, 0), std::invalid_argument);
}

TEST_CASE("run records round trip through json") {
  const Scenario s = Scenario::from_table(kConflict);
  OversightParams params;
  params.kappa = 2;
  const RunRecord r = run_oversight(s, {0.3, 0.5, 0.7}, params, 3);
  const std::string text = to_json_string(r);
  const RunRecord back = run_record_from_json_string(text);
  CHECK(to_json_string(back) == text);
  CHECK(back.r_term == r.r_term);
  REQUIRE(back.table);
  CHECK(*back.table == kConflict);
  CHECK(back.rounds.back().expenditures == r.rounds.back().expenditures);
  CHECK_THROWS_AS(run_record_from_json_string("{}"), ctop::SchemaError);
}

TEST_CASE("csv has one row per round") {
  const Scenario s = Scenario::from_table(kConflict);
  OversightParams params;
  params.kappa = 2;
  const RunRecord r = run_oversight(s, {0.3, 0.5, 0.7}, params, 3);
  CHECK(csv_header_rounds() == "run_id,round,kappa,alpha,total_shortfall,system_cost,gini,agreed_choice,r_bound\n");
  const std::string rows = to_csv_rows(r, "x");
  CHECK(static_cast<std::size_t>(std::count(rows.begin(), rows.end(), '\n')) == r.rounds.size());
  std::istringstream in(rows);
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("x,1,2,1,", 0) == 0);
}
