#include "denovo/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "denovo/errors.hpp"

namespace denovo {

namespace {

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.finished && !b.finished;
}

// log-softmax restricted to residues + STOP; other entries are -inf.
std::vector<double> allowed_log_probs(const std::vector<double>& logits, const Vocabulary& vocab) {
  if (logits.size() != static_cast<std::size_t>(vocab.size())) {
    throw DimensionError("scorer returned " + std::to_string(logits.size()) + " logits for vocabulary of " +
                         std::to_string(vocab.size()));
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> out(logits.size(), ninf);
  double mx = ninf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (id == Vocabulary::kStop || vocab.is_residue(id)) mx = std::max(mx, logits[i]);
  }
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (id == Vocabulary::kStop || vocab.is_residue(id)) z += std::exp(logits[i] - mx);
  }
  const double lse = mx + std::log(z);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (id == Vocabulary::kStop || vocab.is_residue(id)) out[i] = logits[i] - lse;
  }
  return out;
}

using ExtensionFilter = std::function<bool(const Hypothesis& parent, TokenId token, const Hypothesis& child)>;

std::vector<Hypothesis> run_beam(const NextTokenScorer& scorer, const Vocabulary& vocab, int beam_width, int max_len,
                                 const ExtensionFilter& accept,
                                 const std::function<bool(const Hypothesis&)>& accept_final,
                                 const std::function<void(const Hypothesis&)>& on_survivor) {
  if (beam_width < 1) throw DomainError("beam_width must be >= 1");
  if (max_len < 1) throw DomainError("max_len must be >= 1");
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> done;
  const auto residues = vocab.residue_ids();

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    for (const auto& h : live) {
      const auto lp = allowed_log_probs(scorer(h.tokens), vocab);
      Hypothesis stop = h;
      stop.finished = true;
      stop.log_prob += lp[Vocabulary::kStop];
      if (!accept || accept(h, Vocabulary::kStop, stop)) candidates.push_back(std::move(stop));
      for (TokenId r : residues) {
        Hypothesis ext = h;
        ext.tokens.push_back(r);
        ext.log_prob += lp[static_cast<std::size_t>(r)];
        ext.mass += vocab.residue_mass(r);
        if (!accept || accept(h, r, ext)) candidates.push_back(std::move(ext));
      }
    }
    std::sort(candidates.begin(), candidates.end(), ranks_before);
    if (candidates.size() > static_cast<std::size_t>(beam_width)) candidates.resize(static_cast<std::size_t>(beam_width));
    live.clear();
    for (auto& c : candidates) {
      if (on_survivor) on_survivor(c);
      if (c.finished) {
        done.push_back(std::move(c));
      } else if (c.tokens.size() == static_cast<std::size_t>(max_len)) {
        c.finished = true;
        if (!accept_final || accept_final(c)) done.push_back(std::move(c));
      } else {
        live.push_back(std::move(c));
      }
    }
  }
  std::sort(done.begin(), done.end(), ranks_before);
  return done;
}

}  // namespace

std::vector<Hypothesis> beam_search(const NextTokenScorer& scorer, const Vocabulary& vocab, int beam_width,
                                    int max_len) {
  return run_beam(scorer, vocab, beam_width, max_len, nullptr, nullptr, nullptr);
}

NextTokenScorer ar_scorer(const ModelBundle& model, const EncodedSpectrum& encoded) {
  return [&model, &encoded](std::span<const TokenId> prefix) {
    ad::NoGradGuard no_grad;
    const ad::Tensor logits = model.ar_decode_step(encoded, prefix);
    return std::vector<double>(logits.data().begin(), logits.data().end());
  };
}

NextTokenScorer diffusion_prefix_scorer(const ModelBundle& model, const EncodedSpectrum& encoded,
                                        const NoiseSchedule& schedule) {
  return [&model, &encoded, schedule](std::span<const TokenId> prefix) {
    ad::NoGradGuard no_grad;
    const int L = model.config().max_len;
    if (prefix.size() >= static_cast<std::size_t>(L)) throw DomainError("prefix fills the canvas");
    std::vector<TokenId> canvas(prefix.begin(), prefix.end());
    canvas.resize(static_cast<std::size_t>(L), Vocabulary::kMask);
    const int masked = L - static_cast<int>(prefix.size());
    const ad::Tensor logits = model.diffusion_denoise(encoded, canvas, schedule.timestep_for(masked, L));
    const double* row = logits.row(prefix.size());
    return std::vector<double>(row, row + logits.cols());
  };
}

std::vector<Hypothesis> beam_search(const ModelBundle& model, const EncodedSpectrum& encoded, int beam_width) {
  if (model.variant() != DecoderVariant::kAR) {
    throw DomainError("beam_search needs an AR bundle; " + to_string(model.variant()) + " decodes via denoise_loop");
  }
  return beam_search(ar_scorer(model, encoded), model.vocab(), beam_width, model.config().max_len);
}

double mass_budget(double precursor_neutral_mass) { return precursor_neutral_mass - MassConstants::kWater; }

double tolerance_da(double budget, double tolerance_ppm) { return std::abs(budget) * tolerance_ppm * 1e-6; }

KnapsackSearchResult knapsack_beam_search(const NextTokenScorer& scorer, const Vocabulary& vocab,
                                          double precursor_neutral_mass, const KnapsackTable& table,
                                          const KnapsackSearchOptions& options) {
  if (table.vocab_hash() != vocab.hash()) throw DomainError("knapsack table built for a different vocabulary");
  if (!(options.tolerance_ppm >= 0)) throw DomainError("tolerance_ppm must be >= 0");
  const double budget = mass_budget(precursor_neutral_mass);
  if (!table.covers(budget)) throw DomainError("knapsack table does not cover the precursor mass");
  const double tol = tolerance_da(budget, options.tolerance_ppm);
  // Grid rounding drifts by at most half a cell per residue.
  const double slack = (options.max_len + 1) * table.resolution();

  const ExtensionFilter accept = [&](const Hypothesis&, TokenId token, const Hypothesis& child) {
    if (token == Vocabulary::kStop) return std::abs(child.mass - budget) <= tol;
    if (child.mass > budget + tol) return false;
    if (options.suffix_check && !table.feasible(budget - child.mass, tol + slack)) return false;
    return true;
  };
  const auto accept_final = [&](const Hypothesis& h) { return std::abs(h.mass - budget) <= tol; };
  KnapsackSearchResult result;
  result.hypotheses =
      run_beam(scorer, vocab, options.beam_width, options.max_len, accept, accept_final, options.on_survivor);
  return result;
}

KnapsackSearchResult knapsack_beam_search(const ModelBundle& model, const EncodedSpectrum& encoded,
                                          const KnapsackTable& table, const KnapsackSearchOptions& options,
                                          const NoiseSchedule& schedule) {
  KnapsackSearchOptions opts = options;
  opts.max_len = std::min(opts.max_len, model.config().max_len);
  const NextTokenScorer scorer =
      is_diffusion(model.variant()) ? diffusion_prefix_scorer(model, encoded, schedule) : ar_scorer(model, encoded);
  return knapsack_beam_search(scorer, model.vocab(), encoded.precursor_mass, table, opts);
}

double ppm_error(const Vocabulary& vocab, const Peptide& peptide, const Spectrum& spectrum) {
  const double mz = precursor_mz(vocab, peptide, spectrum.charge);
  return std::abs(mz - spectrum.precursor_mz) / spectrum.precursor_mz * 1e6;
}

FilterResult delta_mass_filter(const Vocabulary& vocab, const std::vector<std::optional<Peptide>>& predictions,
                               const std::vector<Spectrum>& spectra, double tolerance_ppm) {
  if (predictions.size() != spectra.size()) throw DimensionError("delta_mass_filter: prediction/spectrum count mismatch");
  FilterResult r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && ppm_error(vocab, *predictions[i], spectra[i]) <= tolerance_ppm) {
      r.kept.push_back(i);
    } else {
      r.dropped.push_back(i);
    }
  }
  return r;
}

}  // namespace denovo
