#include <doctest.h>

#include "hif/augmented_factor.hpp"
#include "structure_fuzz.hpp"

using namespace hif;


namespace {

void fuzz(AugMode mode, std::uint64_t seed) {
  const auto rep = structure_fuzz::fuzz_structure(mode, seed, 1000);
  CHECK(rep.sequences == 1000);
  CHECK(rep.mismatches == 0);
  CHECK(rep.cost_violations == 0);
  CHECK(rep.check_failures == 0);
  if (mode == AugMode::full) CHECK(rep.worst_interchange_ratio > 0);
}

}  // namespace

TEST_CASE("augmented factor matches a shadow model: partial") { fuzz(AugMode::partial, 1); }
TEST_CASE("augmented factor matches a shadow model: partial with gap") { fuzz(AugMode::partial_gap, 2); }
TEST_CASE("augmented factor matches a shadow model: full") { fuzz(AugMode::full, 3); }

TEST_CASE("row-primary finalize gives CSR blocks") {
  AugmentedFactor<double> u(4, AugMode::partial_gap, Orientation::row_major);
  const std::vector<Index> c0 = {1, 3};
  const std::vector<double> v0 = {2.0, 3.0};
  u.append(c0, v0);
  u.defer(1);  // logical column 1 goes to position 3, old 3 becomes 2
  const std::vector<Index> c1 = {3};
  const std::vector<double> v1 = {5.0};
  u.append(c1, v1);
  auto [lead, trail] = u.finalize(2);
  CHECK(lead.is_row_major());
  CHECK(lead.nrows() == 2);
  CHECK(trail.nrows() == 2);
  CHECK(trail.ncols() == 2);
  CHECK(trail.coeff(0, 0) == 3.0);  // old column 3 at logical 2
  CHECK(trail.coeff(0, 1) == 2.0);  // deferred column at logical 3
  CHECK(trail.coeff(1, 1) == 5.0);
  CHECK(lead.nnz() == 0);
}

TEST_CASE("misuse is rejected") {
  AugmentedFactor<double> f(3, AugMode::partial);
  const std::vector<Index> bad = {0};
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(f.append(bad, one), std::invalid_argument);
  const std::vector<Index> unsorted = {2, 1};
  const std::vector<double> two = {1.0, 1.0};
  CHECK_THROWS_AS(f.append(unsorted, two), std::invalid_argument);
  CHECK_THROWS_AS(f.defer(0), std::logic_error);
  CHECK_THROWS_AS(f.interchange(0, 1), std::logic_error);
  AugmentedFactor<double> g(3, AugMode::partial_gap);
  CHECK_THROWS_AS(g.defer(1), std::invalid_argument);
  CHECK_THROWS_AS(g.for_each_secondary(2, [](Index, double) {}), std::invalid_argument);
  CHECK_THROWS_AS(g.finalize(1), std::invalid_argument);
}
