#include "denovo/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "denovo/errors.hpp"

namespace denovo {

int match_amino_acids(const Vocabulary& vocab, const Peptide& predicted, const Peptide& truth, double prefix_tol_da,
                      double residue_tol_da) {
  std::size_t i = 0, j = 0;
  double cum_pred = 0.0, cum_truth = 0.0;
  int matched = 0;
  while (i < predicted.length() && j < truth.length()) {
    const double mp = vocab.residue_mass(predicted.tokens[i]);
    const double mt = vocab.residue_mass(truth.tokens[j]);
    const double next_pred = cum_pred + mp;
    const double next_truth = cum_truth + mt;
    if (std::abs(next_pred - next_truth) <= prefix_tol_da) {
      if (std::abs(mp - mt) <= residue_tol_da) ++matched;
      cum_pred = next_pred;
      cum_truth = next_truth;
      ++i;
      ++j;
    } else if (next_pred < next_truth) {
      cum_pred = next_pred;
      ++i;
    } else {
      cum_truth = next_truth;
      ++j;
    }
  }
  return matched;
}

double MatchRecord::aa_recall() const {
  return truth_aa_count == 0 ? 0.0 : static_cast<double>(matched_aa_count) / truth_aa_count;
}

MatchRecord make_record(const Vocabulary& vocab, const PredictionEntry& entry, const MatchTolerance& tol) {
  MatchRecord r;
  r.spectrum_id = entry.spectrum_id;
  r.truth = entry.truth;
  r.truth_aa_count = static_cast<int>(entry.truth.length());
  if (entry.filtered) {
    r.status = PredictionStatus::kFiltered;
    r.predicted = entry.predicted;
    return r;
  }
  if (!entry.predicted) return r;
  r.status = PredictionStatus::kPredicted;
  r.predicted = entry.predicted;
  r.predicted_aa_count = static_cast<int>(entry.predicted->length());
  r.matched_aa_count = match_amino_acids(vocab, *entry.predicted, entry.truth, tol.prefix_da, tol.residue_da);
  r.exact_peptide_match = r.matched_aa_count == r.truth_aa_count && r.predicted_aa_count == r.truth_aa_count;
  return r;
}

EvalReport evaluate(const Vocabulary& vocab, const std::vector<PredictionEntry>& entries, const MatchTolerance& tol) {
  EvalReport rep;
  std::set<std::string> seen;
  long matched = 0, predicted_aa = 0, truth_aa = 0;
  int exact = 0;
  for (const auto& e : entries) {
    if (!seen.insert(e.spectrum_id).second) throw DomainError("evaluate: duplicate spectrum id '" + e.spectrum_id + "'");
    MatchRecord r = make_record(vocab, e, tol);
    truth_aa += r.truth_aa_count;
    if (r.status == PredictionStatus::kPredicted) {
      ++rep.predicted_spectra;
      matched += r.matched_aa_count;
      predicted_aa += r.predicted_aa_count;
      exact += r.exact_peptide_match ? 1 : 0;
    } else {
      ++rep.unpredicted_spectra;
      if (r.status == PredictionStatus::kFiltered) ++rep.filtered_spectra;
    }
    rep.records.push_back(std::move(r));
  }
  rep.total_spectra = static_cast<int>(entries.size());
  rep.peptide_coverage = rep.total_spectra ? static_cast<double>(rep.predicted_spectra) / rep.total_spectra : 0.0;
  rep.aa_recall = truth_aa ? static_cast<double>(matched) / static_cast<double>(truth_aa) : 0.0;
  if (rep.predicted_spectra == 0) {
    rep.precision_undefined = true;
  } else {
    rep.peptide_precision = static_cast<double>(exact) / rep.predicted_spectra;
    rep.aa_precision = predicted_aa ? static_cast<double>(matched) / static_cast<double>(predicted_aa) : 0.0;
  }
  return rep;
}

namespace {

const char* status_name(PredictionStatus s) {
  switch (s) {
    case PredictionStatus::kPredicted: return "predicted";
    case PredictionStatus::kUnpredicted: return "unpredicted";
    case PredictionStatus::kFiltered: return "filtered";
  }
  return "?";
}

PredictionStatus parse_status(const std::string& s, std::size_t line) {
  if (s == "predicted") return PredictionStatus::kPredicted;
  if (s == "unpredicted") return PredictionStatus::kUnpredicted;
  if (s == "filtered") return PredictionStatus::kFiltered;
  throw ParseError("unknown status '" + s + "'", line);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

void write_report(std::ostream& out, const Vocabulary& vocab, const EvalReport& report) {
  out << "# denovo eval report v1\n";
  out << "id\tstatus\tpredicted\ttruth\tmatched\tpredicted_aa\ttruth_aa\texact\n";
  for (const auto& r : report.records) {
    out << r.spectrum_id << '\t' << status_name(r.status) << '\t'
        << (r.predicted ? render_sequence(vocab, *r.predicted) : std::string("-")) << '\t'
        << render_sequence(vocab, r.truth) << '\t' << r.matched_aa_count << '\t' << r.predicted_aa_count << '\t'
        << r.truth_aa_count << '\t' << (r.exact_peptide_match ? 1 : 0) << '\n';
  }
  out << "#summary\n";
  out << "total_spectra\t" << report.total_spectra << '\n';
  out << "predicted_spectra\t" << report.predicted_spectra << '\n';
  out << "unpredicted_spectra\t" << report.unpredicted_spectra << '\n';
  out << "filtered_spectra\t" << report.filtered_spectra << '\n';
  out << "peptide_precision\t" << fmt(report.peptide_precision) << '\n';
  out << "peptide_coverage\t" << fmt(report.peptide_coverage) << '\n';
  out << "aa_precision\t" << fmt(report.aa_precision) << '\n';
  out << "aa_recall\t" << fmt(report.aa_recall) << '\n';
  out << "precision_undefined\t" << (report.precision_undefined ? 1 : 0) << '\n';
  if (!out) throw IoError("failed writing eval report");
}

void write_report_file(const std::string& path, const Vocabulary& vocab, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_report(out, vocab, report);
}

EvalReport read_report(std::istream& in, const Vocabulary& vocab, const MatchTolerance& tol) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != "# denovo eval report v1") throw ParseError("not an eval report (v1)", 1);
  ++line_no;
  std::vector<PredictionEntry> entries;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "#summary") break;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("id\t", 0) == 0) continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 8) throw ParseError("expected 8 fields", line_no);
    PredictionEntry e;
    e.spectrum_id = f[0];
    const auto status = parse_status(f[1], line_no);
    if (f[2] != "-") e.predicted = parse_sequence(vocab, f[2]);
    e.truth = parse_sequence(vocab, f[3]);
    e.filtered = status == PredictionStatus::kFiltered;
    if (status == PredictionStatus::kUnpredicted) e.predicted.reset();
    entries.push_back(std::move(e));
  }
  // Metrics are recomputed from the records; the summary block is informational.
  return evaluate(vocab, entries, tol);
}

EvalReport read_report_file(const std::string& path, const Vocabulary& vocab, const MatchTolerance& tol) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report '" + path + "'");
  return read_report(in, vocab, tol);
}

}  // namespace denovo
