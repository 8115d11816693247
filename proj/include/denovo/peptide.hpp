#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace denovo {

using TokenId = int;

struct MassConstants {
  static constexpr double kWater = 18.010565;
  static constexpr double kProton = 1.007276;
};

// Residue alphabet plus the three special tokens. Special tokens always take
// IDs 0..2 so that residues are dense from kFirstResidue upwards.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kStop = 1;
  static constexpr TokenId kMask = 2;
  static constexpr TokenId kFirstResidue = 3;

  struct Residue {
    std::string symbol;  // canonical rendering, e.g. "M[+15.995]"
    double mass;
  };

  // 20 standard residues (C carbamidomethylated) plus M(ox), N(deam), Q(deam).
  static Vocabulary standard();
  // G, A, S, P, V: pairwise distinct masses, no isobaric pairs.
  static Vocabulary toy();
  // Subset of the standard table, in the given order.
  static Vocabulary from_symbols(const std::vector<std::string>& symbols);

  int size() const { return kFirstResidue + static_cast<int>(residues_.size()); }
  int residue_count() const { return static_cast<int>(residues_.size()); }
  bool toy_mode() const { return toy_mode_; }

  bool is_special(TokenId id) const { return id >= 0 && id < kFirstResidue; }
  bool is_residue(TokenId id) const { return id >= kFirstResidue && id < size(); }

  double residue_mass(TokenId id) const;
  const std::string& symbol(TokenId id) const;
  std::optional<TokenId> find(std::string_view symbol) const;
  std::vector<TokenId> residue_ids() const;
  std::vector<std::string> residue_symbols() const;

  // Stable FNV-1a over symbols and masses; keys the knapsack cache.
  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const;

 private:
  Vocabulary(std::vector<Residue> residues, bool toy_mode);
  std::vector<Residue> residues_;
  bool toy_mode_ = false;
};

struct Peptide {
  std::vector<TokenId> tokens;

  std::size_t length() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const Peptide&) const = default;
};

double residue_mass(const Vocabulary& vocab, TokenId token);

// Sum of residue masses (no water).
double residue_sum(const Vocabulary& vocab, std::span<const TokenId> tokens);

// Neutral monoisotopic mass: residues + water.
double peptide_mass(const Vocabulary& vocab, const Peptide& peptide);

double precursor_mz(const Vocabulary& vocab, const Peptide& peptide, int charge);

// Neutral peptide mass implied by an observed precursor m/z and charge.
double neutral_mass_from_mz(double mz, int charge);

// Single-letter codes with optional bracketed mass shifts ("M[+15.995]A").
Peptide parse_sequence(const Vocabulary& vocab, std::string_view text);
std::string render_sequence(const Vocabulary& vocab, const Peptide& peptide);

// Throws DomainError if any token is special or out of range.
void validate_peptide(const Vocabulary& vocab, const Peptide& peptide);

}  // namespace denovo
