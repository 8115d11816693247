#include "denovo/synthgen.hpp"

#include <algorithm>
#include <random>

#include "denovo/errors.hpp"

namespace denovo {

void SynthConfig::validate() const {
  if (min_length < 1) throw ConfigError("synth: min_length must be >= 1");
  if (max_length < min_length) throw ConfigError("synth: length range is empty");
  if (charges.empty()) throw ConfigError("synth: charge set is empty");
  for (int c : charges) {
    if (c < 1) throw ConfigError("synth: charges must be >= 1");
  }
  if (noise_peaks < 0) throw ConfigError("synth: noise_peaks must be >= 0");
  if (!(peak_dropout >= 0.0 && peak_dropout < 1.0)) throw ConfigError("synth: peak_dropout must be in [0,1)");
  if (!(mz_jitter >= 0.0)) throw ConfigError("synth: mz_jitter must be >= 0");
}

std::vector<Peak> theoretical_ions(const Vocabulary& vocab, const Peptide& peptide) {
  if (peptide.empty()) throw DomainError("theoretical_ions: empty peptide");
  const std::size_t n = peptide.length();
  std::vector<Peak> ions;
  ions.reserve(2 * n);
  double prefix = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prefix += vocab.residue_mass(peptide.tokens[i]);
    ions.push_back({prefix + MassConstants::kProton, 1.0});  // b_{i+1}
  }
  double suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    suffix += vocab.residue_mass(peptide.tokens[i]);
    ions.push_back({suffix + MassConstants::kWater + MassConstants::kProton, 1.0});
  }
  std::sort(ions.begin(), ions.end(), [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
  return ions;
}

std::vector<Spectrum> generate_corpus(const SynthConfig& cfg, int n) {
  cfg.validate();
  if (n < 1) throw ConfigError("synth: n must be >= 1");
  const auto residues = cfg.vocab.residue_ids();
  std::vector<Spectrum> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int idx = 0; idx < n; ++idx) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(idx)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> len_dist(cfg.min_length, cfg.max_length);
    std::uniform_int_distribution<std::size_t> res_dist(0, residues.size() - 1);
    std::uniform_int_distribution<std::size_t> charge_dist(0, cfg.charges.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, cfg.mz_jitter > 0 ? cfg.mz_jitter : 1.0);

    Peptide p;
    const int len = len_dist(rng);
    for (int i = 0; i < len; ++i) p.tokens.push_back(residues[res_dist(rng)]);
    const int charge = cfg.charges[charge_dist(rng)];

    Spectrum s;
    s.title = "synth:" + std::to_string(cfg.seed) + ":" + std::to_string(idx);
    s.charge = charge;
    s.precursor_mz = precursor_mz(cfg.vocab, p, charge);
    for (const Peak& ion : theoretical_ions(cfg.vocab, p)) {
      if (cfg.peak_dropout > 0.0 && unit(rng) < cfg.peak_dropout) continue;
      Peak q = ion;
      if (cfg.mz_jitter > 0.0) q.mz += jitter(rng);
      s.peaks.push_back(q);
    }
    const double hi = std::max(200.0, peptide_mass(cfg.vocab, p) + 2 * MassConstants::kProton);
    for (int k = 0; k < cfg.noise_peaks; ++k) {
      const double mz = 50.5 + unit(rng) * (hi - 50.5);
      s.peaks.push_back({mz, 0.05 + 0.95 * unit(rng)});
    }
    std::sort(s.peaks.begin(), s.peaks.end(), [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
    s.annotation = std::move(p);
    out.push_back(std::move(s));
  }
  return out;
}

Split split_of(const std::string& title) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : title) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  const auto bucket = h % 10;
  if (bucket < 8) return Split::kTrain;
  if (bucket == 8) return Split::kValidation;
  return Split::kTest;
}

}  // namespace denovo
