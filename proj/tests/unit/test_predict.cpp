#include <sstream>

#include "denovo/errors.hpp"
#include "denovo/predict.hpp"
#include "denovo/synthgen.hpp"
#include "doctest.h"

using namespace denovo;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.model_dim = 16;
  c.heads = 2;
  c.encoder_layers = 1;
  c.ar_layers = 1;
  c.ds_layers = 1;
  c.ds_dim = 8;
  c.dm_layers = 1;
  c.max_len = 7;
  return c;
}

std::vector<Spectrum> prepared(int n) {
  auto s = generate_corpus(SynthConfig{}, n);
  for (auto& x : s) x = preprocess(x, PreprocessConfig{});
  return s;
}

}  // namespace

TEST_CASE("decoder and variant compatibility") {
  CHECK_NOTHROW(check_decoder(DecoderVariant::kAR, DecoderKind::kBeam));
  CHECK_NOTHROW(check_decoder(DecoderVariant::kDS, DecoderKind::kKnapsackBeam));
  CHECK_THROWS_AS(check_decoder(DecoderVariant::kDM2, DecoderKind::kGreedy), ConfigError);
  CHECK_THROWS_AS(check_decoder(DecoderVariant::kAR, DecoderKind::kDiffusion), ConfigError);
  CHECK(parse_decoder_kind("knapsack-beam") == DecoderKind::kKnapsackBeam);
  CHECK_THROWS_AS(parse_decoder_kind("viterbi"), ConfigError);
}

TEST_CASE("parallel prediction matches serial") {
  const auto spectra = prepared(12);
  const auto table = KnapsackTable::build(Vocabulary::toy(), KnapsackTable::kDefaultResolution, 1200.0);
  for (auto [variant, decoder] : {std::pair{DecoderVariant::kAR, DecoderKind::kBeam},
                                  std::pair{DecoderVariant::kAR, DecoderKind::kKnapsackBeam},
                                  std::pair{DecoderVariant::kDS, DecoderKind::kKnapsackBeam},
                                  std::pair{DecoderVariant::kDM2, DecoderKind::kDiffusion}}) {
    ModelBundle m(Vocabulary::toy(), small_config(), variant, 3);
    PredictOptions opt;
    opt.decoder = decoder;
    const auto serial = predict(m, spectra, opt, &table);
    opt.jobs = 3;
    const auto parallel = predict(m, spectra, opt, &table);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(serial[i].spectrum_id == spectra[i].title);
      CHECK(serial[i].peptide == parallel[i].peptide);
      CHECK(serial[i].score == parallel[i].score);
      CHECK(serial[i].seconds > 0.0);
    }
    if (decoder == DecoderKind::kKnapsackBeam)
      for (std::size_t i = 0; i < serial.size(); ++i)
        if (serial[i].peptide)
          CHECK(std::abs(peptide_mass(m.vocab(), *serial[i].peptide) - spectra[i].precursor_neutral_mass()) <
                0.05);
  }
}

TEST_CASE("prediction files and entries") {
  const auto spectra = prepared(5);
  ModelBundle m(Vocabulary::toy(), small_config(), DecoderVariant::kAR, 3);
  PredictOptions opt;
  opt.delta_filter = true;
  const auto preds = predict(m, spectra, opt);
  std::stringstream ss;
  write_predictions(ss, m.vocab(), preds);
  const auto back = read_predictions(ss, m.vocab());
  REQUIRE(back.size() == preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(back[i].peptide == preds[i].peptide);
    CHECK(back[i].filtered == preds[i].filtered);
  }
  const auto entries = to_entries(preds, spectra);
  CHECK(entries.size() == 5);
  auto fewer = preds;
  fewer.pop_back();
  CHECK_THROWS_AS(to_entries(fewer, spectra), DomainError);
  auto raw = spectra;
  raw[0].preprocessed = false;
  CHECK_THROWS_AS(predict(m, raw, opt), DomainError);
  opt.decoder = DecoderKind::kKnapsackBeam;
  CHECK_THROWS_AS(predict(m, spectra, opt), ConfigError);
}
