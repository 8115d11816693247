#include "denovo/predict.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>
#include <unordered_map>

#include "denovo/errors.hpp"
#include "denovo/search.hpp"

namespace denovo {

std::string to_string(DecoderKind d) {
  switch (d) {
    case DecoderKind::kGreedy: return "greedy";
    case DecoderKind::kBeam: return "beam";
    case DecoderKind::kKnapsackBeam: return "knapsack-beam";
    case DecoderKind::kDiffusion: return "diffusion";
  }
  return "?";
}

DecoderKind parse_decoder_kind(const std::string& text) {
  if (text == "greedy") return DecoderKind::kGreedy;
  if (text == "beam") return DecoderKind::kBeam;
  if (text == "knapsack-beam") return DecoderKind::kKnapsackBeam;
  if (text == "diffusion") return DecoderKind::kDiffusion;
  throw ConfigError("unknown decoder '" + text + "' (valid: greedy, beam, knapsack-beam, diffusion)");
}

DecoderKind default_decoder(DecoderVariant variant) {
  return is_diffusion(variant) ? DecoderKind::kDiffusion : DecoderKind::kBeam;
}

void check_decoder(DecoderVariant variant, DecoderKind decoder) {
  const bool ar_only = decoder == DecoderKind::kGreedy || decoder == DecoderKind::kBeam;
  if (ar_only && is_diffusion(variant))
    throw ConfigError("decoder " + to_string(decoder) + " needs an AR model, got " + to_string(variant));
  if (decoder == DecoderKind::kDiffusion && !is_diffusion(variant))
    throw ConfigError("decoder diffusion needs a diffusion model, got " + to_string(variant));
}

namespace {

Prediction predict_one(const ModelBundle& model, const Spectrum& spectrum, const PredictOptions& opt,
                       const KnapsackTable* table) {
  ad::NoGradGuard no_grad;
  const auto start = std::chrono::steady_clock::now();
  Prediction p;
  p.spectrum_id = spectrum.title;
  const EncodedSpectrum enc = model.encode_spectrum(spectrum);
  switch (opt.decoder) {
    case DecoderKind::kGreedy:
    case DecoderKind::kBeam: {
      const int width = opt.decoder == DecoderKind::kGreedy ? 1 : opt.beam_width;
      const auto hyps = beam_search(model, enc, width);
      if (!hyps.empty() && !hyps.front().tokens.empty()) {
        p.peptide = Peptide{hyps.front().tokens};
        p.score = hyps.front().log_prob;
      }
      break;
    }
    case DecoderKind::kKnapsackBeam: {
      KnapsackSearchOptions ko;
      ko.beam_width = opt.beam_width;
      ko.max_len = model.config().max_len;
      ko.tolerance_ppm = opt.tolerance_ppm;
      ko.suffix_check = opt.suffix_check;
      const auto res = knapsack_beam_search(model, enc, *table, ko, opt.schedule);
      if (res.feasible()) {
        p.peptide = Peptide{res.hypotheses.front().tokens};
        p.score = res.hypotheses.front().log_prob;
      }
      break;
    }
    case DecoderKind::kDiffusion: {
      DenoiseOptions dopt;
      dopt.stop_truncate = opt.stop_truncate;
      const auto tokens = denoise_loop(model, enc, opt.schedule, dopt);
      Peptide pep = sequence_to_peptide(model.vocab(), tokens);
      if (!pep.tokens.empty()) p.peptide = std::move(pep);
      break;
    }
  }
  if (opt.delta_filter && p.peptide) {
    const auto f = delta_mass_filter(model.vocab(), {p.peptide}, {spectrum}, opt.tolerance_ppm);
    p.filtered = f.kept.empty();
  }
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

}  // namespace

std::vector<Prediction> predict(const ModelBundle& model, const std::vector<Spectrum>& spectra,
                                const PredictOptions& options, const KnapsackTable* table) {
  check_decoder(model.variant(), options.decoder);
  if (options.beam_width < 1) throw ConfigError("beam_width must be >= 1");
  if (options.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(options.tolerance_ppm > 0)) throw ConfigError("tolerance_ppm must be > 0");
  options.schedule.validate();
  if (options.decoder == DecoderKind::kKnapsackBeam && table == nullptr)
    throw ConfigError("knapsack-beam decoding needs a knapsack table");
  for (const auto& s : spectra)
    if (!s.preprocessed) throw DomainError("predict: spectrum '" + s.title + "' is not preprocessed");

  std::vector<Prediction> out(spectra.size());
  if (options.jobs == 1 || spectra.size() < 2) {
    for (std::size_t i = 0; i < spectra.size(); ++i) out[i] = predict_one(model, spectra[i], options, table);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spectra.size()) return;
      try {
        out[i] = predict_one(model, spectra[i], options, table);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(spectra.size());
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(options.jobs), spectra.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<PredictionEntry> to_entries(const std::vector<Prediction>& predictions,
                                        const std::vector<Spectrum>& spectra) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.spectrum_id, &p).second)
      throw DomainError("duplicate prediction for spectrum '" + p.spectrum_id + "'");
  if (by_id.size() != spectra.size()) throw DomainError("prediction and spectrum id sets differ");
  std::vector<PredictionEntry> entries;
  entries.reserve(spectra.size());
  for (const auto& s : spectra) {
    if (!s.annotation) throw DomainError("spectrum '" + s.title + "' has no annotation");
    const auto it = by_id.find(s.title);
    if (it == by_id.end()) throw DomainError("no prediction for spectrum '" + s.title + "'");
    PredictionEntry e;
    e.spectrum_id = s.title;
    e.truth = *s.annotation;
    e.predicted = it->second->peptide;
    e.filtered = it->second->filtered;
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_predictions(std::ostream& out, const Vocabulary& vocab, const std::vector<Prediction>& predictions) {
  out << "# denovo predictions v1\n";
  out << "id\tprediction\tscore\tseconds\tstatus\n";
  char buf[64];
  for (const auto& p : predictions) {
    out << p.spectrum_id << '\t' << (p.peptide ? render_sequence(vocab, *p.peptide) : std::string("-")) << '\t';
    std::snprintf(buf, sizeof(buf), "%.6f\t%.6f", p.score, p.seconds);
    out << buf << '\t' << (p.filtered ? "filtered" : p.peptide ? "predicted" : "unpredicted") << '\n';
  }
  if (!out) throw IoError("failed writing predictions");
}

void write_predictions_file(const std::string& path, const Vocabulary& vocab,
                            const std::vector<Prediction>& predictions) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_predictions(out, vocab, predictions);
}

std::vector<Prediction> read_predictions(std::istream& in, const Vocabulary& vocab) {
  std::string line;
  if (!std::getline(in, line) || line != "# denovo predictions v1") throw ParseError("not a predictions file (v1)", 1);
  if (!std::getline(in, line) || line.rfind("id\t", 0) != 0) throw ParseError("missing header row", 2);
  std::vector<Prediction> out;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 5) throw ParseError("expected 5 fields", line_no);
    Prediction p;
    p.spectrum_id = f[0];
    if (f[1] != "-") p.peptide = parse_sequence(vocab, f[1]);
    try {
      p.score = std::stod(f[2]);
      p.seconds = std::stod(f[3]);
    } catch (const std::exception&) {
      throw ParseError("bad number", line_no);
    }
    if (f[4] == "filtered") {
      p.filtered = true;
    } else if (f[4] != "predicted" && f[4] != "unpredicted") {
      throw ParseError("unknown status '" + f[4] + "'", line_no);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> read_predictions_file(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions '" + path + "'");
  return read_predictions(in, vocab);
}

}  // namespace denovo
