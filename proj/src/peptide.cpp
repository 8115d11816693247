#include "denovo/peptide.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <set>

#include "denovo/errors.hpp"

namespace denovo {

namespace {

// Monoisotopic residue masses in Da. C carries the fixed carbamidomethyl mod.
const std::vector<Vocabulary::Residue>& standard_table() {
  static const std::vector<Vocabulary::Residue> table = {
      {"G", 57.02146},  {"A", 71.03711},  {"S", 87.03203},  {"P", 97.05276},
      {"V", 99.06841},  {"T", 101.04768}, {"C", 160.03065}, {"L", 113.08406},
      {"I", 113.08406}, {"N", 114.04293}, {"D", 115.02694}, {"Q", 128.05858},
      {"K", 128.09496}, {"E", 129.04259}, {"M", 131.04049}, {"H", 137.05891},
      {"F", 147.06841}, {"R", 156.10111}, {"Y", 163.06333}, {"W", 186.07931},
      {"M[+15.995]", 147.03540},  // oxidation
      {"N[+0.984]", 115.02695},   // deamidation
      {"Q[+0.984]", 129.04260},   // deamidation
  };
  return table;
}

// Shifts already folded into the unmodified residue's mass.
struct FixedMod {
  char residue;
  double shift;
};
constexpr FixedMod kFixedMods[] = {{'C', 57.02146}};

constexpr double kModShiftTolerance = 0.01;

bool is_residue_letter(char c) { return c >= 'A' && c <= 'Z'; }

}  // namespace

Vocabulary::Vocabulary(std::vector<Residue> residues, bool toy_mode)
    : residues_(std::move(residues)), toy_mode_(toy_mode) {
  std::set<std::string> seen;
  for (const auto& r : residues_) {
    if (!(r.mass > 0.0)) throw VocabularyError("residue '" + r.symbol + "' has non-positive mass");
    if (!seen.insert(r.symbol).second) throw VocabularyError("duplicate residue symbol '" + r.symbol + "'");
  }
}

Vocabulary Vocabulary::standard() { return Vocabulary(standard_table(), false); }

Vocabulary Vocabulary::toy() {
  Vocabulary v = from_symbols({"G", "A", "S", "P", "V"});
  v.toy_mode_ = true;
  return v;
}

Vocabulary Vocabulary::from_symbols(const std::vector<std::string>& symbols) {
  if (symbols.empty()) throw VocabularyError("vocabulary needs at least one residue");
  std::vector<Residue> picked;
  for (const auto& s : symbols) {
    bool found = false;
    for (const auto& r : standard_table()) {
      if (r.symbol == s) {
        picked.push_back(r);
        found = true;
        break;
      }
    }
    if (!found) throw VocabularyError("unknown residue symbol '" + s + "'");
  }
  return Vocabulary(std::move(picked), false);
}

double Vocabulary::residue_mass(TokenId id) const {
  if (is_special(id)) throw DomainError("special token " + std::to_string(id) + " has no mass");
  if (!is_residue(id)) throw VocabularyError("token id " + std::to_string(id) + " not in vocabulary");
  return residues_[static_cast<std::size_t>(id - kFirstResidue)].mass;
}

const std::string& Vocabulary::symbol(TokenId id) const {
  static const std::string kSpecial[] = {"<pad>", "<stop>", "<mask>"};
  if (is_special(id)) return kSpecial[id];
  if (!is_residue(id)) throw VocabularyError("token id " + std::to_string(id) + " not in vocabulary");
  return residues_[static_cast<std::size_t>(id - kFirstResidue)].symbol;
}

std::optional<TokenId> Vocabulary::find(std::string_view symbol) const {
  for (std::size_t i = 0; i < residues_.size(); ++i) {
    if (residues_[i].symbol == symbol) return kFirstResidue + static_cast<TokenId>(i);
  }
  return std::nullopt;
}

std::vector<TokenId> Vocabulary::residue_ids() const {
  std::vector<TokenId> ids(residues_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = kFirstResidue + static_cast<TokenId>(i);
  return ids;
}

std::vector<std::string> Vocabulary::residue_symbols() const {
  std::vector<std::string> out;
  for (const auto& r : residues_) out.push_back(r.symbol);
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& r : residues_) {
    mix(r.symbol.data(), r.symbol.size());
    const auto micro = static_cast<std::int64_t>(std::llround(r.mass * 1e5));
    mix(&micro, sizeof(micro));
  }
  return h;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  if (residues_.size() != other.residues_.size()) return false;
  for (std::size_t i = 0; i < residues_.size(); ++i) {
    if (residues_[i].symbol != other.residues_[i].symbol || residues_[i].mass != other.residues_[i].mass)
      return false;
  }
  return true;
}

double residue_mass(const Vocabulary& vocab, TokenId token) { return vocab.residue_mass(token); }

double residue_sum(const Vocabulary& vocab, std::span<const TokenId> tokens) {
  double total = 0.0;
  for (TokenId t : tokens) total += vocab.residue_mass(t);
  return total;
}

double peptide_mass(const Vocabulary& vocab, const Peptide& peptide) {
  return residue_sum(vocab, peptide.tokens) + MassConstants::kWater;
}

double precursor_mz(const Vocabulary& vocab, const Peptide& peptide, int charge) {
  if (charge < 1) throw DomainError("charge must be >= 1, got " + std::to_string(charge));
  return (peptide_mass(vocab, peptide) + charge * MassConstants::kProton) / charge;
}

double neutral_mass_from_mz(double mz, int charge) {
  if (charge < 1) throw DomainError("charge must be >= 1, got " + std::to_string(charge));
  return mz * charge - charge * MassConstants::kProton;
}

Peptide parse_sequence(const Vocabulary& vocab, std::string_view text) {
  Peptide out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t letter_pos = i;
    const char letter = text[i];
    if (!is_residue_letter(letter)) {
      throw ParseError("unexpected character '" + std::string(1, letter) + "' in sequence", letter_pos + 1);
    }
    ++i;
    std::optional<double> shift;
    if (i < text.size() && text[i] == '[') {
      const auto close = text.find(']', i);
      if (close == std::string_view::npos) throw ParseError("unterminated modification bracket", i + 1);
      const std::string body(text.substr(i + 1, close - i - 1));
      char* end = nullptr;
      const double value = std::strtod(body.c_str(), &end);
      if (body.empty() || end != body.c_str() + body.size()) {
        throw ParseError("malformed modification '" + body + "'", i + 1);
      }
      shift = value;
      i = close + 1;
    }

    std::optional<TokenId> id;
    if (!shift) {
      id = vocab.find(std::string(1, letter));
    } else {
      for (const auto& fixed : kFixedMods) {
        if (fixed.residue == letter && std::abs(fixed.shift - *shift) <= kModShiftTolerance) {
          id = vocab.find(std::string(1, letter));
        }
      }
      if (!id) {
        for (TokenId cand : vocab.residue_ids()) {
          const std::string& sym = vocab.symbol(cand);
          if (sym.size() < 3 || sym[0] != letter || sym[1] != '[') continue;
          const double cand_shift = std::strtod(sym.c_str() + 2, nullptr);
          if (std::abs(cand_shift - *shift) <= kModShiftTolerance) {
            id = cand;
            break;
          }
        }
      }
      if (!id) throw ParseError("unknown modification on '" + std::string(1, letter) + "'", letter_pos + 1);
    }
    if (!id) throw ParseError("residue '" + std::string(1, letter) + "' not in vocabulary", letter_pos + 1);
    out.tokens.push_back(*id);
  }
  return out;
}

std::string render_sequence(const Vocabulary& vocab, const Peptide& peptide) {
  std::string out;
  for (TokenId t : peptide.tokens) {
    if (!vocab.is_residue(t)) throw DomainError("cannot render non-residue token " + std::to_string(t));
    out += vocab.symbol(t);
  }
  return out;
}

void validate_peptide(const Vocabulary& vocab, const Peptide& peptide) {
  for (TokenId t : peptide.tokens) {
    if (!vocab.is_residue(t)) throw DomainError("peptide contains non-residue token " + std::to_string(t));
  }
}

}  // namespace denovo
