#include "denovo/losses.hpp"

#include <vector>

#include "denovo/errors.hpp"

namespace denovo {

namespace {

struct Scored {
  std::vector<std::size_t> rows;
  std::vector<int> targets;
};

Scored scored_rows(const ad::Tensor& logits, std::span<const int> targets) {
  if (targets.size() != logits.rows()) {
    throw DimensionError("loss: " + std::to_string(targets.size()) + " targets for logits " + logits.shape_str());
  }
  Scored s;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == kIgnoreTarget) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= logits.cols()) {
      throw DomainError("loss: target " + std::to_string(targets[i]) + " outside vocabulary");
    }
    s.rows.push_back(i);
    s.targets.push_back(targets[i]);
  }
  if (s.rows.empty()) throw DomainError("loss: no scored positions");
  return s;
}

ad::Tensor ce_on(const ad::Tensor& logits, const Scored& s) {
  const ad::Tensor picked = ad::select_rows(logits, s.rows);
  return ad::neg(ad::mean(ad::pick(ad::log_softmax(picked), s.targets)));
}

}  // namespace

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kCrossEntropy: return "cross_entropy";
    case LossKind::kWeightedEntropy: return "weighted_entropy";
    case LossKind::kDinoiser: return "dinoiser";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "cross_entropy") return LossKind::kCrossEntropy;
  if (text == "weighted_entropy") return LossKind::kWeightedEntropy;
  if (text == "dinoiser") return LossKind::kDinoiser;
  throw ConfigError("unknown loss kind '" + text + "' (valid: cross_entropy, weighted_entropy, dinoiser)");
}

void LossConfig::validate() const {
  if (!(lambda_entropy >= 0)) throw ConfigError("loss.lambda_entropy must be >= 0");
  if (!(sigma_min >= 0 && sigma_min <= sigma_max)) throw ConfigError("loss: need 0 <= sigma_min <= sigma_max");
}

ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const int> targets) {
  return ce_on(logits, scored_rows(logits, targets));
}

ad::Tensor weighted_entropy(const ad::Tensor& logits, std::span<const int> targets, double lambda) {
  const Scored s = scored_rows(logits, targets);
  const ad::Tensor ce = ce_on(logits, s);
  if (lambda == 0.0) return ce;
  const ad::Tensor picked = ad::select_rows(logits, s.rows);
  const ad::Tensor entropy = ad::neg(ad::sum_rows(ad::mul(ad::softmax(picked), ad::log_softmax(picked))));
  return ad::add(ce, ad::scale(ad::mean(entropy), lambda));
}

ad::Tensor dinoiser_loss(const ad::Tensor& logits, std::span<const int> targets, double sigma_min,
                         double sigma_max, std::mt19937_64& rng) {
  if (!(sigma_min >= 0 && sigma_min <= sigma_max)) throw DomainError("dinoiser: need 0 <= sigma_min <= sigma_max");
  const Scored s = scored_rows(logits, targets);
  const double sigma = sigma_min == sigma_max ? sigma_min : std::uniform_real_distribution<double>(sigma_min, sigma_max)(rng);
  if (sigma == 0.0) return ce_on(logits, s);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(logits.size());
  for (auto& e : noise) e = sigma * gauss(rng);
  const ad::Tensor noised = ad::add(logits, ad::Tensor::from(logits.rows(), logits.cols(), std::move(noise)));
  return ce_on(noised, s);
}

ad::Tensor compute_loss(const LossConfig& cfg, const ad::Tensor& logits, std::span<const int> targets,
                        std::mt19937_64& rng) {
  switch (cfg.kind) {
    case LossKind::kCrossEntropy: return cross_entropy(logits, targets);
    case LossKind::kWeightedEntropy: return weighted_entropy(logits, targets, cfg.lambda_entropy);
    case LossKind::kDinoiser: return dinoiser_loss(logits, targets, cfg.sigma_min, cfg.sigma_max, rng);
  }
  throw DomainError("unknown loss kind");
}

}  // namespace denovo
