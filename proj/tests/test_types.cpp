#include <stdexcept>

#include "doctest.h"
#include "nego/types.hpp"

using namespace nego;

TEST_CASE("cost table stores choices as rows and agents as columns") {
  const CostTable t = CostTable::from_rows({{1, 2}, {3, 4}});
  CHECK(t.choices() == 2);
  CHECK(t.agents() == 2);
  CHECK(t(ChoiceId{1}, 0) == 3);
  CHECK(t(ChoiceId{0}, 1) == 2);
  CHECK(t.row(ChoiceId{1})[1] == 4);
  CHECK_THROWS_AS(t.at(ChoiceId{2}, 0), std::out_of_range);
  CHECK_THROWS_AS(t.at(ChoiceId{0}, 2), std::out_of_range);
}

TEST_CASE("ragged rows are rejected") {
  CHECK_THROWS_AS(CostTable::from_rows({{1, 2}, {3}}), std::invalid_argument);
  CHECK_THROWS_AS(CostTable(2, 2, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("bundle space encodes flight 0 as the least significant digit") {
  const BundleSpace space({3, 3, 3, 3, 3});
  CHECK(space.size() == 243);
  const std::vector<std::size_t> digits{2, 0, 1, 0, 0};
  const ChoiceId id = space.encode(digits);
  CHECK(id.index == 2 + 1 * 9);
  CHECK(space.decode(id) == digits);
  for (std::size_t c = 0; c < space.size(); ++c) CHECK(space.encode(space.decode(ChoiceId{c})).index == c);
}

TEST_CASE("mixed radices round trip") {
  const BundleSpace space({2, 5, 3});
  CHECK(space.size() == 30);
  const std::vector<std::size_t> digits{1, 4, 2};
  CHECK(space.decode(space.encode(digits)) == digits);
  CHECK_THROWS(space.encode(std::vector<std::size_t>{2, 0, 0}));
  CHECK_THROWS(space.decode(ChoiceId{30}));
}

TEST_CASE("bundle spaces beyond 64 bits overflow") {
  const BundleSpace huge(std::vector<std::size_t>(70, 2));
  CHECK_THROWS_AS(huge.size(), std::overflow_error);
}
