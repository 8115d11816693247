#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "denovo/peptide.hpp"

namespace denovo {

inline constexpr double kPrefixToleranceDa = 0.5;
inline constexpr double kResidueToleranceDa = 0.1;

// Two-pointer alignment on cumulative prefix masses: the side with the
// smaller running mass advances; a pair counts when both the prefix masses
// and the residue masses agree within tolerance.
int match_amino_acids(const Vocabulary& vocab, const Peptide& predicted, const Peptide& truth,
                      double prefix_tol_da = kPrefixToleranceDa, double residue_tol_da = kResidueToleranceDa);

enum class PredictionStatus { kPredicted, kUnpredicted, kFiltered };

struct MatchRecord {
  std::string spectrum_id;
  std::optional<Peptide> predicted;
  Peptide truth;
  PredictionStatus status = PredictionStatus::kUnpredicted;
  int matched_aa_count = 0;
  int predicted_aa_count = 0;
  int truth_aa_count = 0;
  bool exact_peptide_match = false;

  double aa_recall() const;
};

struct PredictionEntry {
  std::string spectrum_id;
  std::optional<Peptide> predicted;  // nullopt: no prediction
  Peptide truth;
  bool filtered = false;  // rejected by the delta-mass filter
};

struct EvalReport {
  double peptide_precision = 0.0;
  double peptide_coverage = 0.0;
  double aa_precision = 0.0;
  double aa_recall = 0.0;
  std::vector<MatchRecord> records;
  int total_spectra = 0;
  int predicted_spectra = 0;
  int unpredicted_spectra = 0;  // includes filtered
  int filtered_spectra = 0;
  // No predicted spectra: precision metrics are reported as 0 by convention.
  bool precision_undefined = false;
};

struct MatchTolerance {
  double prefix_da = kPrefixToleranceDa;
  double residue_da = kResidueToleranceDa;
};

MatchRecord make_record(const Vocabulary& vocab, const PredictionEntry& entry, const MatchTolerance& tol = {});
EvalReport evaluate(const Vocabulary& vocab, const std::vector<PredictionEntry>& entries,
                    const MatchTolerance& tol = {});

// Tab-separated, one record per line, then a "#summary" block:
//
//   # denovo eval report v1
//   id  status  predicted  truth  matched  predicted_aa  truth_aa  exact
//   ...
//   #summary
//   peptide_precision  <value>
//   ...
void write_report(std::ostream& out, const Vocabulary& vocab, const EvalReport& report);
void write_report_file(const std::string& path, const Vocabulary& vocab, const EvalReport& report);
EvalReport read_report(std::istream& in, const Vocabulary& vocab, const MatchTolerance& tol = {});
EvalReport read_report_file(const std::string& path, const Vocabulary& vocab, const MatchTolerance& tol = {});

}  // namespace denovo
