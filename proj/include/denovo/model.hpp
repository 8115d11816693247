#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>

#include "denovo/nn.hpp"
#include "denovo/peptide.hpp"
#include "denovo/spectrum.hpp"

namespace denovo {

enum class DecoderVariant { kAR, kDS, kDM1, kDM2 };

std::string to_string(DecoderVariant v);
DecoderVariant parse_variant(const std::string& text);
inline bool is_diffusion(DecoderVariant v) { return v != DecoderVariant::kAR; }

struct ModelConfig {
  int model_dim = 64;
  int heads = 4;
  int encoder_layers = 2;
  int ar_layers = 2;
  int ds_layers = 1;
  int ds_dim = 32;
  int dm_layers = 2;
  int ff_mult = 2;      // feed-forward hidden width = ff_mult * dim
  int max_len = 10;     // decoding canvas length
  int max_charge = 10;
  double mz_min_wavelength = 0.001;
  double mz_max_wavelength = 10000.0;

  // Shape checks plus the decoder size ordering DS < AR < DM1 < DM2, which
  // every accepted config must satisfy. Throws ConfigError.
  void validate(int vocab_size) const;
};

struct ParamCounts {
  std::size_t encoder = 0;
  std::size_t decoder = 0;
  std::size_t total() const { return encoder + decoder; }
};

// Decoder-only scalar count for a variant, without building a bundle.
std::size_t decoder_param_count(const ModelConfig& cfg, DecoderVariant variant, int vocab_size);

struct EncodedSpectrum {
  ad::Tensor memory;  // [peaks + 1, model_dim]; row 0 is the precursor row
  double precursor_mass = 0.0;  // neutral, Da
  int charge = 1;
};

class ModelBundle {
 public:
  ModelBundle(Vocabulary vocab, ModelConfig cfg, DecoderVariant variant, std::uint64_t seed);
  ~ModelBundle();
  ModelBundle(ModelBundle&&) noexcept;
  ModelBundle& operator=(ModelBundle&&) noexcept;

  const Vocabulary& vocab() const { return vocab_; }
  const ModelConfig& config() const { return cfg_; }
  DecoderVariant variant() const { return variant_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }
  ParamCounts param_count() const;

  // Peaks must be preprocessed (sorted by m/z) and non-empty.
  EncodedSpectrum encode_spectrum(const Spectrum& spectrum) const;

  // Teacher-forced AR logits: row i scores token i given prefix[0..i).
  // Returns [prefix.size() + 1, vocab_size].
  ad::Tensor ar_logits(const EncodedSpectrum& enc, std::span<const TokenId> prefix) const;
  // Next-token logits after `prefix` ([1, vocab_size]).
  ad::Tensor ar_decode_step(const EncodedSpectrum& enc, std::span<const TokenId> prefix) const;

  // Non-causal denoiser over a full canvas at timestep t in [1, T].
  // Returns [max_len, vocab_size].
  ad::Tensor diffusion_denoise(const EncodedSpectrum& enc, std::span<const TokenId> canvas, int t) const;

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static ModelBundle load(std::istream& in);
  static ModelBundle load_file(const std::string& path);

  struct Impl;

 private:
  Vocabulary vocab_;
  ModelConfig cfg_;
  DecoderVariant variant_;
  nn::ParameterStore store_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace denovo
