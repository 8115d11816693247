#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "denovo/diffusion.hpp"
#include "denovo/knapsack.hpp"
#include "denovo/metrics.hpp"
#include "denovo/model.hpp"
#include "denovo/spectrum.hpp"

namespace denovo {

enum class DecoderKind { kGreedy, kBeam, kKnapsackBeam, kDiffusion };

std::string to_string(DecoderKind d);
DecoderKind parse_decoder_kind(const std::string& text);
DecoderKind default_decoder(DecoderVariant variant);
// Greedy and beam need an AR bundle, the denoise loop a diffusion bundle;
// knapsack beam search takes either. Throws ConfigError otherwise.
void check_decoder(DecoderVariant variant, DecoderKind decoder);

struct PredictOptions {
  DecoderKind decoder = DecoderKind::kBeam;
  int beam_width = 5;
  double tolerance_ppm = 30.0;
  bool suffix_check = true;
  bool stop_truncate = false;
  // Drop predictions whose precursor m/z misses the spectrum's by more than
  // tolerance_ppm.
  bool delta_filter = false;
  NoiseSchedule schedule;
  int jobs = 1;
};

struct Prediction {
  std::string spectrum_id;
  std::optional<Peptide> peptide;
  double score = 0.0;    // log-probability for beam decoders, 0 otherwise
  double seconds = 0.0;  // wall time, encoding included
  bool filtered = false;
};

// Spectra must be preprocessed. `table` is required for knapsack beam search.
std::vector<Prediction> predict(const ModelBundle& model, const std::vector<Spectrum>& spectra,
                                const PredictOptions& options, const KnapsackTable* table = nullptr);

// Pairs predictions with the annotated spectra by id. Throws on unannotated
// spectra or mismatched id sets.
std::vector<PredictionEntry> to_entries(const std::vector<Prediction>& predictions,
                                        const std::vector<Spectrum>& spectra);

// "# denovo predictions v1", a header row, then
// id  prediction  score  seconds  status
void write_predictions(std::ostream& out, const Vocabulary& vocab, const std::vector<Prediction>& predictions);
void write_predictions_file(const std::string& path, const Vocabulary& vocab,
                            const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(std::istream& in, const Vocabulary& vocab);
std::vector<Prediction> read_predictions_file(const std::string& path, const Vocabulary& vocab);

}  // namespace denovo
