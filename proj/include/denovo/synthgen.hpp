#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "denovo/peptide.hpp"
#include "denovo/spectrum.hpp"

namespace denovo {

struct SynthConfig {
  Vocabulary vocab = Vocabulary::toy();
  int min_length = 3;
  int max_length = 6;
  std::vector<int> charges = {1, 2};
  int noise_peaks = 0;
  double peak_dropout = 0.0;
  double mz_jitter = 0.0;  // Gaussian std, Da
  std::uint64_t seed = 1;

  void validate() const;
};

// Singly charged b and y ions with unit intensity, sorted by m/z.
std::vector<Peak> theoretical_ions(const Vocabulary& vocab, const Peptide& peptide);

// Spectrum i depends only on (cfg, i).
std::vector<Spectrum> generate_corpus(const SynthConfig& cfg, int n);

enum class Split { kTrain, kValidation, kTest };

// 80/10/10 on a stable hash of the title.
Split split_of(const std::string& title);

}  // namespace denovo
