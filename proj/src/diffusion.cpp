#include "denovo/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "denovo/errors.hpp"

namespace denovo {

void NoiseSchedule::validate() const {
  if (steps < 1) throw ConfigError("diffusion.steps must be >= 1");
}

double NoiseSchedule::keep_prob(int t) const {
  if (t < 0 || t > steps) {
    throw DomainError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps) + "]");
  }
  if (t == 0) return 1.0;
  if (t == steps) return 0.0;
  return 1.0 - static_cast<double>(t) / static_cast<double>(steps);
}

std::vector<int> NoiseSchedule::unmask_counts(int canvas_len) const {
  validate();
  if (canvas_len < 1) throw DomainError("canvas length must be >= 1");
  const int n = std::min(steps, canvas_len);
  std::vector<int> k(static_cast<std::size_t>(n), canvas_len / n);
  for (int i = 0; i < canvas_len % n; ++i) ++k[static_cast<std::size_t>(i)];
  return k;
}

int NoiseSchedule::timestep_for(int masked, int canvas_len) const {
  if (masked <= 0) return 1;
  const int t = static_cast<int>(std::ceil(static_cast<double>(steps) * masked / canvas_len - 1e-12));
  return std::clamp(t, 1, steps);
}

std::vector<std::size_t> Canvas::masked_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == Vocabulary::kMask) out.push_back(i);
  return out;
}

std::size_t Canvas::masked_count() const {
  return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), Vocabulary::kMask));
}

Canvas corrupt(std::span<const TokenId> target, int t, const NoiseSchedule& schedule, std::mt19937_64& rng) {
  const double keep = schedule.keep_prob(t);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Canvas c{std::vector<TokenId>(target.begin(), target.end())};
  for (auto& tok : c.tokens) {
    // One draw per position regardless of t keeps mask patterns nested across t for a fixed seed.
    if (unit(rng) >= keep) tok = Vocabulary::kMask;
  }
  return c;
}

std::vector<TokenId> padded_target(const Peptide& peptide, int max_len) {
  if (peptide.length() > static_cast<std::size_t>(max_len)) {
    throw DomainError("peptide of length " + std::to_string(peptide.length()) + " exceeds max_len " +
                      std::to_string(max_len));
  }
  std::vector<TokenId> out(peptide.tokens);
  if (out.size() < static_cast<std::size_t>(max_len)) out.push_back(Vocabulary::kStop);
  out.resize(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  return out;
}

std::vector<TokenId> denoise_loop(const DenoiseScorer& scorer, int max_len, int vocab_size,
                                  const NoiseSchedule& schedule, const DenoiseOptions& options,
                                  DenoiseTrace* trace) {
  const auto counts = schedule.unmask_counts(max_len);
  const auto L = static_cast<std::size_t>(max_len);
  const auto V = static_cast<std::size_t>(vocab_size);
  Canvas canvas{std::vector<TokenId>(L, Vocabulary::kMask)};

  for (int k : counts) {
    const auto masked = canvas.masked_positions();
    const int t = schedule.timestep_for(static_cast<int>(masked.size()), max_len);
    const ad::Tensor logits = scorer(canvas.tokens, t);
    if (logits.rows() != L || logits.cols() != V) {
      throw DimensionError("denoiser returned " + logits.shape_str() + ", expected [" + std::to_string(L) + "," +
                           std::to_string(V) + "]");
    }

    std::vector<double> confidence(L, 0.0);
    std::vector<TokenId> best(L, Vocabulary::kPad);
    for (std::size_t pos = 0; pos < L; ++pos) {
      const double* row = logits.row(pos);
      double mx = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t v = 0; v < V; ++v) {
        if (static_cast<TokenId>(v) == Vocabulary::kMask) continue;
        if (row[v] > mx) {
          mx = row[v];
          arg = v;
        }
      }
      double z = 0.0;
      for (std::size_t v = 0; v < V; ++v) {
        if (static_cast<TokenId>(v) != Vocabulary::kMask) z += std::exp(row[v] - mx);
      }
      confidence[pos] = 1.0 / z;
      best[pos] = static_cast<TokenId>(arg);
    }

    std::vector<std::size_t> order = masked;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });
    order.resize(std::min(order.size(), static_cast<std::size_t>(k)));
    for (std::size_t pos : order) canvas.tokens[pos] = best[pos];

    if (trace) {
      std::sort(order.begin(), order.end());
      trace->steps.push_back({t, order, confidence, canvas.masked_positions(), canvas.tokens});
    }
  }

  std::vector<TokenId> out = canvas.tokens;
  if (options.stop_truncate) {
    const auto stop = std::find(out.begin(), out.end(), Vocabulary::kStop);
    out.erase(stop, out.end());
    while (!out.empty() && out.back() == Vocabulary::kPad) out.pop_back();
  }
  return out;
}

std::vector<TokenId> denoise_loop(const ModelBundle& model, const EncodedSpectrum& encoded,
                                  const NoiseSchedule& schedule, const DenoiseOptions& options,
                                  DenoiseTrace* trace) {
  if (!is_diffusion(model.variant())) throw DomainError("denoise_loop requires a diffusion variant, got AR");
  ad::NoGradGuard no_grad;
  const DenoiseScorer scorer = [&](std::span<const TokenId> canvas, int t) {
    return model.diffusion_denoise(encoded, canvas, t);
  };
  return denoise_loop(scorer, model.config().max_len, model.vocab().size(), schedule, options, trace);
}

Peptide sequence_to_peptide(const Vocabulary& vocab, std::span<const TokenId> tokens) {
  Peptide p;
  for (TokenId t : tokens)
    if (vocab.is_residue(t)) p.tokens.push_back(t);
  return p;
}

}  // namespace denovo
