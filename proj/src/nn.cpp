#include "denovo/nn.hpp"

#include <cmath>
#include <numbers>

#include "denovo/errors.hpp"

namespace denovo::nn {

Tensor ParameterStore::add(const std::string& name, Tensor t) {
  for (const auto& [n, _] : entries_) {
    if (n == name) throw DomainError("duplicate parameter name '" + name + "'");
  }
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParameterStore::add_uniform(const std::string& name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(rows * cols);
  for (auto& x : data) x = dist(rng_);
  return add(name, Tensor::from(rows, cols, std::move(data), true));
}

Tensor ParameterStore::add_constant(const std::string& name, std::size_t rows, std::size_t cols, double value) {
  return add(name, Tensor::from(rows, cols, std::vector<double>(rows * cols, value), true));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

std::size_t ParameterStore::scalar_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) {
    if (name.rfind(prefix, 0) == 0) n += t.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

bool ParameterStore::all_finite() const {
  for (const auto& [_, t] : entries_) {
    for (double v : t.data())
      if (!std::isfinite(v)) return false;
  }
  return true;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias)
    : weight(store.add_uniform(name + ".weight", in, out, in)) {
  if (with_bias) bias = store.add_uniform(name + ".bias", 1, out, in);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = ad::matmul(x, weight);
  return bias.defined() ? ad::add(y, bias) : y;
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, std::size_t dim)
    : gamma(store.add_constant(name + ".gamma", 1, dim, 1.0)), beta(store.add_constant(name + ".beta", 1, dim, 0.0)) {}

Tensor LayerNorm::operator()(const Tensor& x) const { return ad::layer_norm(x, gamma, beta); }

Tensor LayerNorm::operator()(const Tensor& x, const Tensor& shift, const Tensor& scale) const {
  // gamma * (1 + scale) and beta + shift, applied row-wise.
  const Tensor g = ad::add(gamma, ad::mul(gamma, scale));
  const Tensor b = ad::add(beta, shift);
  return ad::layer_norm(x, g, b);
}

FeedForward::FeedForward(ParameterStore& store, const std::string& name, std::size_t dim, std::size_t hidden)
    : up(store, name + ".up", dim, hidden), down(store, name + ".down", hidden, dim) {}

Tensor FeedForward::operator()(const Tensor& x) const { return down(ad::gelu(up(x))); }

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& name, std::size_t dim,
                                       std::size_t kv_dim, int n_heads)
    : q(store, name + ".q", dim, dim),
      k(store, name + ".k", kv_dim, dim),
      v(store, name + ".v", kv_dim, dim),
      o(store, name + ".o", dim, dim),
      heads(n_heads) {
  if (n_heads < 1 || dim % static_cast<std::size_t>(n_heads) != 0) {
    throw DimensionError("attention '" + name + "': head count " + std::to_string(n_heads) +
                         " does not divide model dim " + std::to_string(dim));
  }
}

Tensor MultiHeadAttention::operator()(const Tensor& query_in, const Tensor& kv_in, const Tensor& mask) const {
  return o(ad::attention(q(query_in), k(kv_in), v(kv_in), mask, heads));
}

std::vector<double> sinusoidal_embed(double value, std::size_t dim, double min_wavelength, double max_wavelength) {
  if (dim == 0 || dim % 2 != 0) throw DimensionError("sinusoidal_embed: dim must be even, got " + std::to_string(dim));
  if (!(min_wavelength > 0 && max_wavelength >= min_wavelength)) {
    throw DomainError("sinusoidal_embed: invalid wavelength range");
  }
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double frac = half == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(half - 1);
    const double wavelength = min_wavelength * std::pow(max_wavelength / min_wavelength, frac);
    const double angle = 2.0 * std::numbers::pi * value / wavelength;
    out[2 * i] = std::sin(angle);
    out[2 * i + 1] = std::cos(angle);
  }
  return out;
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const auto g = p.grad();
    if (g.empty()) continue;
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace denovo::nn
