#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nego/analysis.hpp"
#include "nego/baselines.hpp"
#include "nego/rng.hpp"

using namespace nego;
using namespace nego::baselines;

namespace {

// Flight f only ever flies inside sector f, so the system cost is a sum of
// independent per-flight terms.
ctop::CtopInstance separable_instance(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t p = 2 + rng.below(3);
  const std::size_t q = 2 + rng.below(3);
  ctop::CtopInstance inst;
  inst.grid = 2;
  inst.horizon = 6;
  for (std::size_t s = 0; s < p; ++s) {
    inst.sectors.push_back({static_cast<double>(s) / p, static_cast<double>(s + 1) / p, 0.0, 1.0});
  }
  for (std::size_t f = 0; f < p; ++f) {
    ctop::Flight flight;
    flight.departure = static_cast<int>(rng.below(4));
    const double lo = inst.sectors[f].xmin, width = inst.sectors[f].xmax - lo;
    for (std::size_t o = 0; o < q; ++o) {
      ctop::Trajectory path;
      for (int t = 0; t < inst.horizon; ++t) {
        if (rng.below(2) == 0) continue;
        path.push_back({lo + width * rng.uniform(0.05, 0.95), rng.uniform(0, 1), t});
      }
      if (path.empty()) path.push_back({lo + width / 2, 0.5, 0});
      flight.options.push_back(path);
    }
    inst.flights.push_back(flight);
  }
  return inst;
}

// Minimum system cost by decoding every bundle directly.
double brute_optimum(const ctop::CtopInstance& inst) {
  const BundleSpace space = inst.bundle_space();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t c = 0; c < space.size(); ++c) {
    const auto bundle = space.decode(ChoiceId{c});
    double total = 0;
    for (std::size_t s = 0; s < inst.sectors.size(); ++s) total += ctop::sector_cost(inst, s, bundle);
    best = std::min(best, total);
  }
  return best;
}

}  // namespace

TEST_CASE("mechanism names round trip") {
  for (Mechanism m : {Mechanism::kOversight, Mechanism::kCentralized, Mechanism::kFcfs, Mechanism::kVoting}) {
    CHECK(mechanism_from_string(to_string(m)) == m);
  }
  CHECK(to_string(Mechanism::kCentralized) == "c-ctop");
  CHECK_THROWS_AS(mechanism_from_string("dictator"), std::invalid_argument);
}

TEST_CASE("centralized picks the system optimum") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{1, 2}, {3, 4}}));
  const BaselineResult r = centralized_ctop(s);
  CHECK(r.choice.index == 0);
  CHECK(r.system_cost == 3);
  CHECK(r.agent_costs == std::vector<double>{1, 2});
  CHECK(r.gini == doctest::Approx(analysis::gini(std::vector<double>{1, 2})));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario c = Scenario::from_ctop(ctop::generate_scenario({}, seed));
    const BaselineResult best = centralized_ctop(c);
    CHECK(best.choice == analysis::system_optimum(c.require_table()).choice);
    CHECK(best.system_cost == doctest::Approx(brute_optimum(*c.ctop())).epsilon(1e-12));
  }
}

TEST_CASE("local-search centralized stays within 5% of the optimum") {
  std::size_t close = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scenario c = Scenario::from_ctop(ctop::generate_scenario({}, 1000 + seed));
    SolverConfig solver;
    solver.kind = SolverKind::kLocalSearch;
    solver.seed = seed;
    const double exact = centralized_ctop(c).system_cost;
    const double local = centralized_ctop(c, solver).system_cost;
    CHECK(local >= exact);
    close += local <= exact + 0.05 * std::abs(exact);
  }
  CHECK(close >= 90);
}

TEST_CASE("fcfs on a single flight equals centralized") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = Scenario::from_ctop(ctop::generate_scenario({3, 1, 4, 4, 8}, seed));
    CHECK(fcfs_ctop(s).system_cost == centralized_ctop(s).system_cost);
  }
}

TEST_CASE("fcfs is optimal on separable instances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ctop::CtopInstance inst = separable_instance(seed);
    REQUIRE(ctop::check_instance(inst).empty());
    const Scenario s = Scenario::from_ctop(inst);
    CHECK(fcfs_ctop(s).system_cost == doctest::Approx(brute_optimum(inst)).epsilon(1e-12));
  }
}

TEST_CASE("centralized dominates fcfs and voting") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Scenario s = Scenario::from_ctop(ctop::generate_scenario({}, 500 + seed));
    const double best = centralized_ctop(s).system_cost;
    CHECK(best <= fcfs_ctop(s).system_cost + 1e-12);
    CHECK(best <= voting(s, seed).system_cost + 1e-12);
  }
}

TEST_CASE("fcfs needs flight structure") {
  CHECK_THROWS_AS(fcfs_ctop(Scenario::from_table(CostTable::from_rows({{1, 2}}))), std::invalid_argument);
}

TEST_CASE("voting with a shared favourite") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(voting(s, seed).choice.index == 0);
}

TEST_CASE("voting follows a two-of-three majority") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{0, 0, 9}, {9, 9, 0}, {5, 5, 5}}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(voting(s, seed).choice.index == 0);
}

TEST_CASE("a three-way tie is drawn uniformly and reproducibly") {
  const Scenario s = Scenario::from_table(CostTable::from_rows({{0, 9, 9}, {9, 0, 9}, {9, 9, 0}}));
  CHECK(voting(s, 77).choice == voting(s, 77).choice);
  std::array<int, 3> counts{};
  const int draws = 10000;
  for (int seed = 0; seed < draws; ++seed) ++counts[voting(s, static_cast<std::uint64_t>(seed)).choice.index];
  const double expected = draws / 3.0;
  const double sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (int c : counts) CHECK(std::abs(c - expected) <= 3 * sigma);
}
