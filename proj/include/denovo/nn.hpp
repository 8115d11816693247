#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "denovo/tensor.hpp"

namespace denovo::nn {

using ad::Tensor;

// Owns every trainable tensor of a model under a unique dotted name.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : rng_(seed) {}

  // Uniform in +-1/sqrt(fan_in).
  Tensor add_uniform(const std::string& name, std::size_t rows, std::size_t cols, std::size_t fan_in);
  Tensor add_constant(const std::string& name, std::size_t rows, std::size_t cols, double value);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  std::size_t scalar_count() const;
  std::size_t scalar_count(const std::string& prefix) const;
  void zero_grad();
  bool all_finite() const;

 private:
  Tensor add(const std::string& name, Tensor t);
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Tensor>> entries_;
};

struct Linear {
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, bool bias = true);
  Tensor operator()(const Tensor& x) const;

  Tensor weight;  // [in, out]
  Tensor bias;    // [1, out] or undefined
};

struct LayerNorm {
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const;
  // Adaptive form: affine further modulated by per-call [1,dim] shift/scale rows.
  Tensor operator()(const Tensor& x, const Tensor& shift, const Tensor& scale) const;

  Tensor gamma;
  Tensor beta;
};

struct FeedForward {
  FeedForward() = default;
  FeedForward(ParameterStore& store, const std::string& name, std::size_t dim, std::size_t hidden);
  Tensor operator()(const Tensor& x) const;

  Linear up;
  Linear down;
};

struct MultiHeadAttention {
  MultiHeadAttention() = default;
  // kv_dim lets queries of one width attend to memory of another.
  MultiHeadAttention(ParameterStore& store, const std::string& name, std::size_t dim, std::size_t kv_dim, int heads);
  Tensor operator()(const Tensor& query_in, const Tensor& kv_in, const Tensor& mask) const;

  Linear q, k, v, o;
  int heads = 1;
};

// Interleaved [sin(2 pi v / l_0), cos(2 pi v / l_0), sin(2 pi v / l_1), ...]
// with dim/2 wavelengths spaced geometrically over [min_wavelength, max_wavelength].
std::vector<double> sinusoidal_embed(double value, std::size_t dim, double min_wavelength, double max_wavelength);

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {});
  void step();
  void zero_grad();
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace denovo::nn
