#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "denovo/errors.hpp"
#include "denovo/knapsack.hpp"
#include "doctest.h"

using namespace denovo;

namespace {

// All cells reachable by multisets of rounded residue masses, by recursion
// over non-decreasing residue indices.
void enumerate(const std::vector<std::int64_t>& cells, std::size_t from, std::int64_t sum, std::int64_t limit,
               std::set<std::int64_t>& out) {
  out.insert(sum);
  for (std::size_t i = from; i < cells.size(); ++i)
    if (sum + cells[i] <= limit) enumerate(cells, i, sum + cells[i], limit, out);
}

}  // namespace

TEST_CASE("table equals brute-force enumeration") {
  const auto v = Vocabulary::toy();
  const double res = 0.01;
  const auto table = KnapsackTable::build(v, res, 400.0);
  const auto limit = static_cast<std::int64_t>(table.cell_count()) - 1;
  std::set<std::int64_t> reachable;
  enumerate(table.residue_cells(), 0, 0, limit, reachable);
  for (std::int64_t c = 0; c <= limit; ++c) CHECK(table.feasible_cell(static_cast<std::size_t>(c)) == reachable.count(c) > 0);
  for (std::size_t i = 0; i < v.residue_ids().size(); ++i)
    CHECK(table.residue_cells()[i] == std::llround(v.residue_mass(v.residue_ids()[i]) / res));
}

TEST_CASE("mass queries") {
  const auto v = Vocabulary::toy();
  const auto table = KnapsackTable::build(v);
  const double ga = 57.02146 + 71.03711;
  CHECK(table.feasible(ga, 0.002));
  CHECK(table.feasible(0.0, 0.0));
  CHECK_FALSE(table.feasible(60.0, 0.01));
  CHECK_FALSE(table.feasible(ga + 0.5, 0.01));
  CHECK(table.covers(3999.0));
  CHECK_FALSE(table.covers(4001.0));
  CHECK_THROWS_AS(KnapsackTable::build(v, 0.0), DomainError);
  CHECK_THROWS_AS(KnapsackTable::build(v, 0.02), DomainError);
  CHECK_THROWS_AS(KnapsackTable::build(v, 0.001, 50.0), DomainError);
}

TEST_CASE("serialization and cache") {
  const auto v = Vocabulary::toy();
  const auto table = KnapsackTable::build(v, 0.001, 800.0);
  std::stringstream ss;
  table.save(ss);
  CHECK(KnapsackTable::load(ss) == table);
  std::stringstream bad("NOTATABLE");
  CHECK_THROWS(KnapsackTable::load(bad));

  const auto dir = std::filesystem::temp_directory_path() / "denovo_knapsack_cache_test";
  std::filesystem::remove_all(dir);
  const auto built = KnapsackTable::load_or_build(dir.string(), v, 0.001, 800.0);
  CHECK(built == table);
  CHECK(std::filesystem::exists(dir / KnapsackTable::cache_file_name(v, 0.001, 800.0)));
  CHECK(KnapsackTable::load_or_build(dir.string(), v, 0.001, 800.0) == table);
  CHECK(KnapsackTable::cache_file_name(v, 0.001, 800.0) != KnapsackTable::cache_file_name(v, 0.002, 800.0));
  std::filesystem::remove_all(dir);
}
