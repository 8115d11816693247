#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "denovo/peptide.hpp"

namespace denovo {

// Bitset over a discretized mass axis: bit i is set iff some multiset of
// residues, each rounded to the grid, sums to cell i. Bit 0 is the empty
// multiset.
class KnapsackTable {
 public:
  static constexpr double kDefaultResolution = 0.0005;
  static constexpr double kDefaultMaxMass = 4000.0;
  static constexpr double kCoarsestResolution = 0.01;

  static KnapsackTable build(const Vocabulary& vocab, double resolution = kDefaultResolution,
                             double max_mass = kDefaultMaxMass);

  // Cached under `cache_dir`, keyed by (vocab hash, resolution, max mass).
  static KnapsackTable load_or_build(const std::string& cache_dir, const Vocabulary& vocab,
                                     double resolution = kDefaultResolution, double max_mass = kDefaultMaxMass);
  static std::string cache_file_name(const Vocabulary& vocab, double resolution, double max_mass);

  double resolution() const { return resolution_; }
  double max_mass() const { return max_mass_; }
  std::uint64_t vocab_hash() const { return vocab_hash_; }
  std::size_t cell_count() const { return cells_; }
  const std::vector<std::int64_t>& residue_cells() const { return residue_cells_; }

  bool feasible_cell(std::size_t cell) const;
  // Any set bit among cells [lo, hi], clipped to the table.
  bool any_in_cells(std::int64_t lo, std::int64_t hi) const;
  // Any constructible mass within [mass - tolerance, mass + tolerance].
  bool feasible(double mass, double tolerance) const;
  bool covers(double mass) const { return mass <= max_mass_; }

  // Binary cache format, little-endian:
  //   "DNKNAPSK" | u32 version=1 | f64 resolution | f64 max_mass |
  //   u64 vocab_hash | u64 cells | u64 words | words * u64
  void save(std::ostream& out) const;
  static KnapsackTable load(std::istream& in);

  bool operator==(const KnapsackTable&) const = default;

 private:
  double resolution_ = kDefaultResolution;
  double max_mass_ = kDefaultMaxMass;
  std::uint64_t vocab_hash_ = 0;
  std::size_t cells_ = 0;
  std::vector<std::int64_t> residue_cells_;
  std::vector<std::uint64_t> words_;
};

}  // namespace denovo
