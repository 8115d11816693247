#pragma once

#include <random>
#include <span>
#include <string>

#include "denovo/tensor.hpp"

namespace denovo {

// Target value meaning "position not scored".
inline constexpr int kIgnoreTarget = -1;

enum class LossKind { kCrossEntropy, kWeightedEntropy, kDinoiser };

std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& text);

enum class LossPositions { kMaskedOnly, kAll };

struct LossConfig {
  LossKind kind = LossKind::kCrossEntropy;
  double lambda_entropy = 0.1;
  double sigma_min = 0.3;
  double sigma_max = 1.0;
  LossPositions positions = LossPositions::kMaskedOnly;  // diffusion training only

  void validate() const;
};

// Mean -log softmax(logits)[target] over rows whose target != kIgnoreTarget.
ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const int> targets);

// cross_entropy + lambda * mean Shannon entropy (nats) of the scored rows.
ad::Tensor weighted_entropy(const ad::Tensor& logits, std::span<const int> targets, double lambda);

// sigma ~ U[sigma_min, sigma_max] once per call; cross_entropy of
// logits + sigma * N(0, 1) noise. Gradients flow through the noised logits.
ad::Tensor dinoiser_loss(const ad::Tensor& logits, std::span<const int> targets, double sigma_min,
                         double sigma_max, std::mt19937_64& rng);

ad::Tensor compute_loss(const LossConfig& cfg, const ad::Tensor& logits, std::span<const int> targets,
                        std::mt19937_64& rng);

}  // namespace denovo
