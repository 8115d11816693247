#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "denovo/peptide.hpp"

namespace denovo {

struct Peak {
  double mz = 0.0;
  double intensity = 0.0;
  bool operator==(const Peak&) const = default;
};

struct Spectrum {
  std::string title;
  double precursor_mz = 0.0;
  int charge = 1;
  std::vector<Peak> peaks;
  std::optional<Peptide> annotation;
  std::optional<double> retention_time;
  // Headers we do not interpret, kept in file order so they survive a rewrite.
  std::vector<std::pair<std::string, std::string>> extra_headers;
  // Set by preprocess(); a second preprocess() call is a no-op.
  bool preprocessed = false;

  double precursor_neutral_mass() const;
  bool operator==(const Spectrum&) const = default;
};

struct PreprocessConfig {
  int max_peaks = 150;
  double mz_min = 50.5;
  double mz_max = 2500.0;
  double precursor_exclusion = 2.0;

  void validate() const;
};

// Reads BEGIN IONS / END IONS blocks. Errors carry the 1-based line number.
std::vector<Spectrum> parse_mgf(std::istream& in, const Vocabulary& vocab);
std::vector<Spectrum> read_mgf_file(const std::string& path, const Vocabulary& vocab);

// Fixed 6-decimal numerics, so parse(write(parse(x))) == parse(x) bit for bit.
void write_mgf(std::ostream& out, const std::vector<Spectrum>& spectra, const Vocabulary& vocab);
void write_mgf_file(const std::string& path, const std::vector<Spectrum>& spectra,
                    const Vocabulary& vocab);

// Window filter, precursor exclusion, top-k by intensity, sqrt + unit L2,
// sorted by m/z. Throws DomainError("empty spectrum") when nothing survives.
Spectrum preprocess(const Spectrum& spectrum, const PreprocessConfig& cfg);

}  // namespace denovo
