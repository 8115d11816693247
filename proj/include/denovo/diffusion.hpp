#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "denovo/model.hpp"
#include "denovo/peptide.hpp"
#include "denovo/tensor.hpp"

namespace denovo {

// Absorbing-mask corruption with a linear survival schedule:
// keep_prob(t) = 1 - t / steps, so keep_prob(0) = 1 and keep_prob(steps) = 0.
struct NoiseSchedule {
  int steps = 10;

  double keep_prob(int t) const;
  // Positions committed at each reverse step for a canvas of `canvas_len`:
  // as even as possible, remainder to the earliest steps, never zero. Uses
  // min(steps, canvas_len) steps.
  std::vector<int> unmask_counts(int canvas_len) const;
  // Noise level matching a canvas with `masked` of `canvas_len` positions masked.
  int timestep_for(int masked, int canvas_len) const;
  void validate() const;
};

struct Canvas {
  std::vector<TokenId> tokens;

  std::vector<std::size_t> masked_positions() const;
  std::size_t masked_count() const;
};

// Each position independently becomes MASK with probability 1 - keep_prob(t).
Canvas corrupt(std::span<const TokenId> target, int t, const NoiseSchedule& schedule, std::mt19937_64& rng);

// Truth tokens + STOP, then PAD up to max_len. Throws if the peptide does not fit.
std::vector<TokenId> padded_target(const Peptide& peptide, int max_len);

// Logits [canvas_len, vocab] for a canvas at noise level t.
using DenoiseScorer = std::function<ad::Tensor(std::span<const TokenId> canvas, int t)>;

struct DenoiseOptions {
  bool stop_truncate = false;
};

// Per-step record, for instrumentation and tests.
struct DenoiseStep {
  int timestep = 0;
  std::vector<std::size_t> committed;           // positions committed this step
  std::vector<double> confidence;               // per position, this step's logits
  std::vector<std::size_t> masked_after;        // still masked after the step
  std::vector<TokenId> canvas_after;
};

struct DenoiseTrace {
  std::vector<DenoiseStep> steps;
};

// Starts from an all-MASK canvas of max_len; each step commits the k most
// confident masked positions (max softmax probability, MASK excluded) to their
// argmax. Ties go to the lower position. With stop_truncate the result is cut
// at the first STOP and trailing PAD is stripped; otherwise the full canvas
// is returned.
std::vector<TokenId> denoise_loop(const DenoiseScorer& scorer, int max_len, int vocab_size,
                                  const NoiseSchedule& schedule, const DenoiseOptions& options,
                                  DenoiseTrace* trace = nullptr);

std::vector<TokenId> denoise_loop(const ModelBundle& model, const EncodedSpectrum& encoded,
                                  const NoiseSchedule& schedule, const DenoiseOptions& options,
                                  DenoiseTrace* trace = nullptr);

// Residue tokens of a decoded sequence, in order; special tokens are dropped.
Peptide sequence_to_peptide(const Vocabulary& vocab, std::span<const TokenId> tokens);

}  // namespace denovo
