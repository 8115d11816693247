#pragma once

#include <cstdint>
#include <string>

#include "denovo/knapsack.hpp"
#include "denovo/metrics.hpp"
#include "denovo/model.hpp"
#include "denovo/predict.hpp"
#include "denovo/spectrum.hpp"
#include "denovo/synthgen.hpp"
#include "denovo/training.hpp"

namespace denovo {

struct SearchConfig {
  std::string decoder;  // empty: default for the variant
  int beam_width = 5;
  double tolerance_ppm = 30.0;
  bool suffix_check = true;
  bool delta_filter = false;
  double knapsack_resolution = KnapsackTable::kDefaultResolution;
  double knapsack_max_mass = 1500.0;
  std::string knapsack_cache_dir;  // empty: build in memory every run
};

// JSON document with the sections below; every key is optional and unknown
// keys are rejected.
//
//   seed                      1
//   vocabulary.kind           "toy" | "standard"         ("toy")
//   preprocess.max_peaks / mz_min / mz_max / precursor_exclusion
//   model.variant             "AR" | "DS" | "DM1" | "DM2" ("AR")
//   model.model_dim ... model.mz_max_wavelength          (ModelConfig)
//   train.epochs / batch_size / learning_rate / beta1 / beta2 / epsilon /
//         validation_interval / time_budget_seconds / loss / lambda_entropy /
//         sigma_min / sigma_max / loss_positions ("masked" | "all")
//   diffusion.steps / stop_truncate
//   search.*                  (SearchConfig)
//   metrics.prefix_tolerance_da / residue_tolerance_da
//   synth.count / min_length / max_length / charges / noise_peaks /
//         peak_dropout / mz_jitter
struct RunConfig {
  std::uint64_t seed = 1;
  std::string vocabulary = "toy";
  PreprocessConfig preprocess;
  DecoderVariant variant = DecoderVariant::kAR;
  ModelConfig model;
  TrainConfig train;
  bool stop_truncate = false;
  SearchConfig search;
  MatchTolerance metrics;
  SynthConfig synth;
  int synth_count = 2500;

  Vocabulary vocab() const;
  // Overrides every seed in the run.
  void set_seed(std::uint64_t s);
  PredictOptions predict_options() const;
  DecoderKind decoder() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& cfg);

}  // namespace denovo
