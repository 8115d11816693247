#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "denovo/peptide.hpp"
#include "denovo/spectrum.hpp"
#include "denovo/synthgen.hpp"
#include "denovo/tensor.hpp"

namespace testutil {

using denovo::ad::Tensor;

inline constexpr double kGradStep = 1e-5;
inline constexpr double kGradTol = 1e-4;

struct GradCheckResult {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
};

// Central differences on `inputs`. Relative error uses max(|a|, |n|) with a
// 1e-6 floor so vanishing gradients are judged on absolute error.
// `stride` > 1 samples every stride-th coordinate (plus the last).
inline GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> inputs,
                                  std::size_t stride = 1) {
  for (auto& t : inputs) t.zero_grad();
  Tensor loss = loss_fn();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    auto g = t.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(t.size(), 0.0);
  }
  GradCheckResult r;
  denovo::ad::NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (stride > 1 && i % stride != 0 && i + 1 != data.size()) continue;
      const double orig = data[i];
      data[i] = orig + kGradStep;
      const double up = loss_fn().item();
      data[i] = orig - kGradStep;
      const double down = loss_fn().item();
      data[i] = orig;
      const double numeric = (up - down) / (2 * kGradStep);
      const double a = analytic[k][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++r.checked;
      if (rel > r.worst) {
        r.worst = rel;
        r.where = "input " + std::to_string(k) + "[" + std::to_string(i) + "] analytic " + std::to_string(a) +
                  " numeric " + std::to_string(numeric);
      }
    }
  }
  return r;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = n(rng);
  return Tensor::from(rows, cols, std::move(v), true);
}

inline denovo::Spectrum synthetic_spectrum(const denovo::Vocabulary& vocab, const std::string& seq, int charge = 1) {
  denovo::Spectrum s;
  const auto pep = denovo::parse_sequence(vocab, seq);
  s.title = "t:" + seq;
  s.charge = charge;
  s.precursor_mz = denovo::precursor_mz(vocab, pep, charge);
  s.peaks = denovo::theoretical_ions(vocab, pep);
  s.annotation = pep;
  return s;
}

}  // namespace testutil
