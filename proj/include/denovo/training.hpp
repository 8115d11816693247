#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "denovo/diffusion.hpp"
#include "denovo/losses.hpp"
#include "denovo/metrics.hpp"
#include "denovo/model.hpp"
#include "denovo/nn.hpp"
#include "denovo/predict.hpp"
#include "denovo/spectrum.hpp"

namespace denovo {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  LossConfig loss;
  NoiseSchedule schedule;  // diffusion variants only
  nn::AdamConfig optimizer{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 1;
  int validation_interval = 1;  // epochs between validations; 0 disables
  std::string checkpoint_path;  // written after every epoch when set
  double time_budget_seconds = 0.0;  // stop after the epoch that crosses it; 0 = unlimited

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  int steps = 0;  // optimizer steps so far
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_aa_precision;
  std::optional<double> val_aa_recall;
  double seconds = 0.0;  // cumulative wall time
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct ValidationResult {
  double loss = 0.0;
  EvalReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Spectra are preprocessed on the way in (no-op if already done).
// `validation` may be empty; validation decodes with `decode`.
TrainHistory train(ModelBundle& model, const std::vector<Spectrum>& corpus, const std::vector<Spectrum>& validation,
                   const TrainConfig& cfg, const PreprocessConfig& preprocess_cfg, const PredictOptions& decode,
                   const EpochCallback& on_epoch = {});

// Loss of one example without recording a graph when grad is disabled.
// AR: next-token loss over truth + STOP. Diffusion: t ~ U[1, T], corrupt,
// score masked non-PAD positions (at least one is forced).
ad::Tensor example_loss(const ModelBundle& model, const Spectrum& spectrum, const TrainConfig& cfg,
                        std::mt19937_64& rng);

// Mean loss and metrics on `corpus`; parameters are untouched and the result
// depends only on (model, corpus, cfg, decode).
ValidationResult validate(const ModelBundle& model, const std::vector<Spectrum>& corpus, const TrainConfig& cfg,
                          const PreprocessConfig& preprocess_cfg, const PredictOptions& decode);

// One JSON object per line.
void write_history(std::ostream& out, const TrainHistory& history);
void write_history_file(const std::string& path, const TrainHistory& history);

}  // namespace denovo
