#include "denovo/errors.hpp"
#include "denovo/synthgen.hpp"
#include "denovo/training.hpp"
#include "doctest.h"
#include "test_util.hpp"

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

std::vector<Spectrum> corpus(int n, std::uint64_t seed = 3) {
  SynthConfig cfg;
  cfg.seed = seed;
  return generate_corpus(cfg, n);
}

PredictOptions decoding_for(DecoderVariant v) {
  PredictOptions o;
  o.decoder = default_decoder(v);
  o.stop_truncate = true;
  return o;
}

}  // namespace

TEST_CASE("training is deterministic") {
  const auto data = corpus(24);
  const auto val = corpus(6, 99);
  for (auto variant : {DecoderVariant::kAR, DecoderVariant::kDM2}) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 5;
    cfg.loss.kind = LossKind::kDinoiser;
    ModelBundle a(Vocabulary::toy(), small_config(), variant, 1);
    ModelBundle b(Vocabulary::toy(), small_config(), variant, 1);
    const auto ha = train(a, data, val, cfg, PreprocessConfig{}, decoding_for(variant));
    const auto hb = train(b, data, val, cfg, PreprocessConfig{}, decoding_for(variant));
    REQUIRE(ha.epochs.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(ha.epochs[i].train_loss == hb.epochs[i].train_loss);
      CHECK(ha.epochs[i].val_loss == hb.epochs[i].val_loss);
      CHECK(ha.epochs[i].val_aa_precision == hb.epochs[i].val_aa_precision);
    }
  }
}

TEST_CASE("AR loss falls on a small noiseless corpus") {
  const auto data = corpus(200);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 16;
  ModelBundle m(Vocabulary::toy(), small_config(), DecoderVariant::kAR, 2);
  const auto h = train(m, data, {}, cfg, PreprocessConfig{}, decoding_for(DecoderVariant::kAR));
  CHECK(h.epochs.back().train_loss < h.epochs.front().train_loss);
  CHECK(h.epochs.back().steps == 50 * 13);
}

TEST_CASE("single-example overfit") {
  const auto one = std::vector<Spectrum>{testutil::synthetic_spectrum(Vocabulary::toy(), "GASPV", 2)};
  for (auto variant : {DecoderVariant::kAR, DecoderVariant::kDS, DecoderVariant::kDM1, DecoderVariant::kDM2}) {
    INFO(to_string(variant));
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 1;
    cfg.optimizer.learning_rate = 3e-3;
    ModelBundle m(Vocabulary::toy(), small_config(), variant, 7);
    double best = 1e9;
    const auto h = train(m, one, {}, cfg, PreprocessConfig{}, decoding_for(variant), [&](const EpochRecord& r) {
      best = std::min(best, r.train_loss);
    });
    CHECK(best < 0.01);
    CHECK(h.epochs.back().train_loss < 0.01);
    const auto v = validate(m, one, cfg, PreprocessConfig{}, decoding_for(variant));
    CHECK(v.report.aa_precision >= 0.99);
  }
}

TEST_CASE("validate is pure and checks its input") {
  const auto data = corpus(10);
  TrainConfig cfg;
  cfg.loss.kind = LossKind::kDinoiser;
  ModelBundle m(Vocabulary::toy(), small_config(), DecoderVariant::kDM1, 3);
  const auto before = m.parameters().entries().front().second.data()[0];
  const auto a = validate(m, data, cfg, PreprocessConfig{}, decoding_for(DecoderVariant::kDM1));
  const auto b = validate(m, data, cfg, PreprocessConfig{}, decoding_for(DecoderVariant::kDM1));
  CHECK(a.loss == b.loss);
  CHECK(a.report.aa_recall == b.report.aa_recall);
  CHECK(m.parameters().entries().front().second.data()[0] == before);
  CHECK_THROWS_AS(validate(m, {}, cfg, PreprocessConfig{}, decoding_for(DecoderVariant::kDM1)), DomainError);
}

TEST_CASE("training rejects bad input") {
  auto data = corpus(4);
  data[1].annotation.reset();
  TrainConfig cfg;
  ModelBundle m(Vocabulary::toy(), small_config(), DecoderVariant::kAR, 1);
  CHECK_THROWS_AS(train(m, data, {}, cfg, PreprocessConfig{}, decoding_for(DecoderVariant::kAR)), DomainError);
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(m, corpus(4), {}, cfg, PreprocessConfig{}, decoding_for(DecoderVariant::kAR)), ConfigError);
  TrainConfig explode;
  explode.optimizer.learning_rate = 1e200;
  explode.epochs = 3;
  CHECK_THROWS_AS(train(m, corpus(8), {}, explode, PreprocessConfig{}, decoding_for(DecoderVariant::kAR)),
                  NumericError);
}
