#include <cmath>
#include <map>
#include <random>

#include "denovo/errors.hpp"
#include "denovo/search.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace denovo;

namespace {

// Random table of logits keyed by prefix, so scores depend on the full history.
struct RandomLm {
  std::uint64_t seed;
  int vocab_size;
  mutable std::map<std::vector<TokenId>, std::vector<double>> cache;

  std::vector<double> operator()(std::span<const TokenId> prefix) const {
    std::vector<TokenId> key(prefix.begin(), prefix.end());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::uint64_t h = seed;
    for (TokenId t : key) h = h * 1000003ULL + static_cast<std::uint64_t>(t) + 1;
    std::mt19937_64 rng(h);
    std::normal_distribution<double> n(0.0, 1.5);
    std::vector<double> logits(static_cast<std::size_t>(vocab_size));
    for (auto& x : logits) x = n(rng);
    cache.emplace(key, logits);
    return logits;
  }
};

double log_prob_of(const RandomLm& lm, const Vocabulary& v, const std::vector<TokenId>& seq, bool stop) {
  double total = 0.0;
  std::vector<TokenId> prefix;
  auto lp = [&](TokenId next) {
    const auto logits = lm(prefix);
    double mx = -1e300;
    for (int i = 0; i < v.size(); ++i)
      if (i == Vocabulary::kStop || v.is_residue(i)) mx = std::max(mx, logits[static_cast<std::size_t>(i)]);
    double z = 0.0;
    for (int i = 0; i < v.size(); ++i)
      if (i == Vocabulary::kStop || v.is_residue(i)) z += std::exp(logits[static_cast<std::size_t>(i)] - mx);
    return logits[static_cast<std::size_t>(next)] - mx - std::log(z);
  };
  for (TokenId t : seq) {
    total += lp(t);
    prefix.push_back(t);
  }
  if (stop) total += lp(Vocabulary::kStop);
  return total;
}

// Best complete sequence by exhaustive enumeration: every residue string of
// length 0..max_len-1 followed by STOP, plus every string of length max_len.
std::vector<TokenId> exhaustive_best(const RandomLm& lm, const Vocabulary& v, int max_len) {
  std::vector<TokenId> best;
  double best_lp = -1e300;
  std::vector<std::vector<TokenId>> frontier{{}};
  for (int len = 0; len <= max_len; ++len) {
    std::vector<std::vector<TokenId>> next;
    for (const auto& s : frontier) {
      const bool at_cap = len == max_len;
      const double lp = log_prob_of(lm, v, s, !at_cap);
      if (lp > best_lp || (lp == best_lp && s < best)) {
        best_lp = lp;
        best = s;
      }
      if (!at_cap)
        for (TokenId r : v.residue_ids()) {
          auto e = s;
          e.push_back(r);
          next.push_back(e);
        }
    }
    frontier = std::move(next);
  }
  return best;
}

}  // namespace

TEST_CASE("exhaustive beam equals brute-force argmax") {
  const auto v = Vocabulary::from_symbols({"G", "A"});  // V = residues + STOP = 3
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomLm lm{seed, v.size(), {}};
    const auto hyps = beam_search(std::cref(lm), v, 27, 3);
    REQUIRE_FALSE(hyps.empty());
    CHECK(hyps.front().tokens == exhaustive_best(lm, v, 3));
  }
}

TEST_CASE("width one is greedy") {
  const auto v = Vocabulary::toy();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomLm lm{seed, v.size(), {}};
    std::vector<TokenId> greedy;
    for (int step = 0; step < 5; ++step) {
      const auto logits = lm(greedy);
      TokenId arg = Vocabulary::kStop;
      for (TokenId r : v.residue_ids())
        if (logits[static_cast<std::size_t>(r)] > logits[static_cast<std::size_t>(arg)]) arg = r;
      if (arg == Vocabulary::kStop) break;
      greedy.push_back(arg);
    }
    const auto hyps = beam_search(std::cref(lm), v, 1, 5);
    REQUIRE(hyps.size() == 1);
    CHECK(hyps.front().tokens == greedy);
  }
  RandomLm lm{1, v.size(), {}};
  CHECK_THROWS_AS(beam_search(std::cref(lm), v, 0, 5), DomainError);
}

TEST_CASE("knapsack beam search respects the budget") {
  const auto v = Vocabulary::toy();
  const auto table = KnapsackTable::build(v, KnapsackTable::kDefaultResolution, 1200.0);
  const auto truth = parse_sequence(v, "GASPV");
  const double neutral = peptide_mass(v, truth);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    RandomLm lm{seed, v.size(), {}};
    KnapsackSearchOptions opt;
    opt.beam_width = 5;
    opt.max_len = 8;
    int survivors = 0;
    opt.on_survivor = [&](const Hypothesis& h) {
      ++survivors;
      CHECK(h.mass <= mass_budget(neutral) + tolerance_da(mass_budget(neutral), opt.tolerance_ppm));
    };
    const auto res = knapsack_beam_search(std::cref(lm), v, neutral, table, opt);
    CHECK(survivors > 0);
    REQUIRE(res.feasible());
    for (const auto& h : res.hypotheses) {
      const double budget = mass_budget(neutral);
      CHECK(std::abs(residue_sum(v, h.tokens) - budget) <= tolerance_da(budget, opt.tolerance_ppm));
    }
  }
  // No multiset of toy residues weighs 60 Da.
  RandomLm lm{0, v.size(), {}};
  KnapsackSearchOptions opt;
  CHECK_FALSE(knapsack_beam_search(std::cref(lm), v, 60.0 + MassConstants::kWater, table, opt).feasible());
  CHECK_THROWS_AS(knapsack_beam_search(std::cref(lm), Vocabulary::standard(), neutral, table, opt), DomainError);
}

TEST_CASE("suffix check prunes dead ends") {
  const auto v = Vocabulary::toy();
  const auto table = KnapsackTable::build(v, KnapsackTable::kDefaultResolution, 1200.0);
  const double neutral = peptide_mass(v, parse_sequence(v, "GG"));
  RandomLm lm{5, v.size(), {}};
  KnapsackSearchOptions opt;
  std::vector<std::vector<TokenId>> seen;
  opt.on_survivor = [&](const Hypothesis& h) { seen.push_back(h.tokens); };
  const auto res = knapsack_beam_search(std::cref(lm), v, neutral, table, opt);
  REQUIRE(res.feasible());
  CHECK(res.hypotheses.front().tokens == parse_sequence(v, "GG").tokens);
  for (const auto& s : seen)
    for (TokenId t : s) CHECK(v.symbol(t) == "G");
}

TEST_CASE("delta mass filter") {
  const auto v = Vocabulary::toy();
  const auto s = testutil::synthetic_spectrum(v, "GASP", 2);
  const auto exact = parse_sequence(v, "GASP");
  const auto swapped = parse_sequence(v, "PSAG");
  const auto wrong = parse_sequence(v, "GASV");
  const auto r = delta_mass_filter(v, {exact, swapped, wrong, std::nullopt}, {s, s, s, s}, 20.0);
  CHECK(r.kept == std::vector<std::size_t>{0, 1});
  CHECK(r.dropped == std::vector<std::size_t>{2, 3});
  CHECK(ppm_error(v, exact, s) < 1e-6);
  // Boundary is inclusive.
  const double ppm = ppm_error(v, wrong, s);
  CHECK(delta_mass_filter(v, {wrong}, {s}, ppm).kept.size() == 1);
}
