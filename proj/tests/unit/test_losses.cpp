#include <cmath>
#include <random>

#include "denovo/errors.hpp"
#include "denovo/losses.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace denovo;
using ad::Tensor;

namespace {

Tensor uniform_logits(std::size_t rows, std::size_t v) { return Tensor::from(rows, v, std::vector<double>(rows * v, 0.3)); }

Tensor one_hot_logits(const std::vector<int>& targets, std::size_t v, double margin) {
  std::vector<double> data(targets.size() * v, 0.0);
  for (std::size_t r = 0; r < targets.size(); ++r) data[r * v + static_cast<std::size_t>(targets[r])] = margin;
  return Tensor::from(targets.size(), v, data, true);
}

}  // namespace

TEST_CASE("cross entropy values") {
  const std::vector<int> t{1, 4, 7};
  CHECK(cross_entropy(uniform_logits(3, 8), t).item() == doctest::Approx(2.0794).epsilon(1e-4));
  CHECK(cross_entropy(uniform_logits(3, 5), std::vector<int>{0, 1, 2}).item() == doctest::Approx(std::log(5.0)));
  double prev = 1e9;
  for (double margin : {1.0, 5.0, 20.0, 60.0}) {
    const double l = cross_entropy(one_hot_logits(t, 8, margin), t).item();
    CHECK(l < prev);
    prev = l;
  }
  CHECK(prev < 1e-20);
  const std::vector<int> ignored{kIgnoreTarget, 2, kIgnoreTarget};
  CHECK(cross_entropy(uniform_logits(3, 4), ignored).item() == doctest::Approx(std::log(4.0)));
  const std::vector<int> none{kIgnoreTarget, kIgnoreTarget, kIgnoreTarget};
  CHECK_THROWS_AS(cross_entropy(uniform_logits(3, 4), none), DomainError);
  CHECK_THROWS_AS(cross_entropy(uniform_logits(3, 4), std::vector<int>{0, 1}), DimensionError);
}

TEST_CASE("weighted entropy values") {
  std::mt19937_64 rng(5);
  const Tensor logits = testutil::random_tensor(4, 6, rng);
  const std::vector<int> t{0, 5, kIgnoreTarget, 2};
  CHECK(weighted_entropy(logits, t, 0.0).item() == cross_entropy(logits, t).item());
  CHECK(weighted_entropy(uniform_logits(2, 6), std::vector<int>{1, 2}, 1.0).item() ==
        doctest::Approx(2 * std::log(6.0)));
  CHECK(weighted_entropy(logits, t, 0.5).item() >= cross_entropy(logits, t).item());
  const std::vector<int> oh{3, 1};
  const Tensor sharp = one_hot_logits(oh, 6, 80.0);
  CHECK(weighted_entropy(sharp, oh, 1.0).item() == doctest::Approx(cross_entropy(sharp, oh).item()).epsilon(1e-12));
}

TEST_CASE("dinoiser values") {
  std::mt19937_64 rng(9);
  const Tensor logits = testutil::random_tensor(3, 5, rng);
  const std::vector<int> t{4, 0, 2};
  std::mt19937_64 r0(1);
  CHECK(dinoiser_loss(logits, t, 0.0, 0.0, r0).item() == cross_entropy(logits, t).item());
  std::mt19937_64 r1(77), r2(77);
  const double a = dinoiser_loss(logits, t, 0.3, 1.0, r1).item();
  CHECK(a == dinoiser_loss(logits, t, 0.3, 1.0, r2).item());
  CHECK(a >= 0.0);
  const Tensor sharp = one_hot_logits(t, 5, 10.0);
  std::mt19937_64 r3(3);
  CHECK(dinoiser_loss(sharp, t, 0.3, 0.3, r3).item() > 0.0);
  LossConfig bad;
  bad.sigma_min = 0.5;
  bad.sigma_max = 0.2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_loss_kind("dinoiser") == LossKind::kDinoiser);
  CHECK(to_string(LossKind::kWeightedEntropy) == "weighted_entropy");
}

TEST_CASE("gradcheck: losses") {
  std::mt19937_64 rng(21);
  Tensor logits = testutil::random_tensor(4, 7, rng);
  const std::vector<int> t{6, kIgnoreTarget, 0, 3};
  auto check = [](const testutil::GradCheckResult& r) {
    INFO(r.where);
    CHECK(r.worst < testutil::kGradTol);
  };
  check(testutil::grad_check([&] { return cross_entropy(logits, t); }, {logits}));
  check(testutil::grad_check([&] { return weighted_entropy(logits, t, 0.37); }, {logits}));
  check(testutil::grad_check(
      [&] {
        std::mt19937_64 noise(1234);
        return dinoiser_loss(logits, t, 0.3, 1.0, noise);
      },
      {logits}));
}
