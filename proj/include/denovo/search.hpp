#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "denovo/diffusion.hpp"
#include "denovo/knapsack.hpp"
#include "denovo/model.hpp"
#include "denovo/peptide.hpp"
#include "denovo/spectrum.hpp"

namespace denovo {

struct Hypothesis {
  std::vector<TokenId> tokens;  // residues only; STOP is implied by `finished`
  double log_prob = 0.0;
  double mass = 0.0;  // residue sum, no water
  bool finished = false;
};

// Logits over the full vocabulary for the token following `prefix`.
using NextTokenScorer = std::function<std::vector<double>(std::span<const TokenId> prefix)>;

// Candidates compete on total log-probability; ties go to the
// lexicographically smaller token sequence. Log-probabilities are normalized
// over residues + STOP. A hypothesis ends on STOP or at max_len.
std::vector<Hypothesis> beam_search(const NextTokenScorer& scorer, const Vocabulary& vocab, int beam_width,
                                    int max_len);
// Autoregressive bundles only.
std::vector<Hypothesis> beam_search(const ModelBundle& model, const EncodedSpectrum& encoded, int beam_width);

struct KnapsackSearchOptions {
  int beam_width = 5;
  int max_len = 10;
  double tolerance_ppm = 30.0;
  // Require the remaining budget after each residue to be constructible.
  bool suffix_check = true;
  // Called for every hypothesis that survives a step.
  std::function<void(const Hypothesis&)> on_survivor;
};

struct KnapsackSearchResult {
  std::vector<Hypothesis> hypotheses;  // ranked, all mass-matched
  bool feasible() const { return !hypotheses.empty(); }
};

double mass_budget(double precursor_neutral_mass);
double tolerance_da(double budget, double tolerance_ppm);

// Beam search restricted to extensions that keep the residue mass within the
// budget (precursor mass - water) + tolerance and, with suffix_check, leave a
// constructible remainder. Only hypotheses matching the budget within
// tolerance are returned; an empty result means no feasible sequence.
KnapsackSearchResult knapsack_beam_search(const NextTokenScorer& scorer, const Vocabulary& vocab,
                                          double precursor_neutral_mass, const KnapsackTable& table,
                                          const KnapsackSearchOptions& options);
// AR bundles score with ar_decode_step; diffusion bundles score position i
// from a canvas holding the prefix followed by MASK.
KnapsackSearchResult knapsack_beam_search(const ModelBundle& model, const EncodedSpectrum& encoded,
                                          const KnapsackTable& table, const KnapsackSearchOptions& options,
                                          const NoiseSchedule& schedule);

NextTokenScorer ar_scorer(const ModelBundle& model, const EncodedSpectrum& encoded);
NextTokenScorer diffusion_prefix_scorer(const ModelBundle& model, const EncodedSpectrum& encoded,
                                        const NoiseSchedule& schedule);

double ppm_error(const Vocabulary& vocab, const Peptide& peptide, const Spectrum& spectrum);

struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
};

// Keeps prediction i iff its precursor m/z is within tolerance_ppm of the
// spectrum's (boundary inclusive). Missing predictions are dropped.
FilterResult delta_mass_filter(const Vocabulary& vocab, const std::vector<std::optional<Peptide>>& predictions,
                               const std::vector<Spectrum>& spectra, double tolerance_ppm);

}  // namespace denovo
