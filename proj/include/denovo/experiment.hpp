#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "denovo/config.hpp"
#include "denovo/metrics.hpp"
#include "denovo/wilcoxon.hpp"

namespace denovo {

struct Comparison {
  std::string label_a;
  std::string label_b;
  EvalReport a;
  EvalReport b;
  // b minus a
  double delta_peptide_precision = 0.0;
  double delta_peptide_coverage = 0.0;
  double delta_aa_precision = 0.0;
  double delta_aa_recall = 0.0;
  // Paired on per-spectrum AA recall, b against a.
  std::optional<WilcoxonResult> test;
  std::string undefined_reason;  // set when the test is undefined
};

// Throws DomainError unless both reports hold the same spectrum ids.
Comparison compare_reports(const EvalReport& a, const EvalReport& b, const std::string& label_a = "A",
                           const std::string& label_b = "B");
std::string format_comparison(const Comparison& c);

struct SplitFiles {
  std::string train;
  std::string validation;
  std::string test;
  int train_count = 0;
  int validation_count = 0;
  int test_count = 0;
};

// Generates cfg.synth_count spectra and writes train/val/test MGF files plus
// manifest.json into out_dir.
SplitFiles write_synthetic_splits(const RunConfig& cfg, const std::string& out_dir);

struct GridRow {
  std::string model;
  std::string decoder;
  std::string loss;
  EvalReport report;
  double mean_seconds = 0.0;  // per spectrum
};

struct GridResult {
  std::vector<GridRow> decoders;  // decoder replacement
  std::vector<GridRow> knapsack;  // knapsack beam search
  std::vector<GridRow> losses;    // loss functions on DM1/DM2
  std::string best_diffusion;
  Comparison best_vs_ar;
  double beam_seconds = 0.0;
  double knapsack_seconds = 0.0;
  double knapsack_overhead() const { return beam_seconds > 0 ? knapsack_seconds / beam_seconds : 0.0; }
};

// Synthesizes data, trains AR/DS/DM1/DM2 with cross-entropy plus DM1/DM2 with
// the other two losses, decodes the test split and tabulates everything.
// Artifacts go to out_dir; progress lines go to `log` when given.
GridResult run_grid(const RunConfig& base, const std::string& out_dir, int jobs, std::ostream* log = nullptr);
std::string format_grid(const GridResult& grid);

}  // namespace denovo
