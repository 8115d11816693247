#include <sstream>

#include "denovo/errors.hpp"
#include "denovo/losses.hpp"
#include "denovo/model.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace denovo;
using ad::Tensor;

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
  c.ff_mult = 2;
  c.max_len = 6;
  return c;
}

Spectrum prepared(const Vocabulary& v, const std::string& seq, int charge = 2) {
  return preprocess(testutil::synthetic_spectrum(v, seq, charge), PreprocessConfig{});
}

std::vector<Tensor> params_of(ModelBundle& m) {
  std::vector<Tensor> out;
  for (auto& [name, t] : m.parameters().entries()) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("decoder size ordering") {
  const int V = Vocabulary::standard().size();
  auto ordered = [&](const ModelConfig& c) {
    const auto ds = decoder_param_count(c, DecoderVariant::kDS, V);
    const auto ar = decoder_param_count(c, DecoderVariant::kAR, V);
    const auto dm1 = decoder_param_count(c, DecoderVariant::kDM1, V);
    const auto dm2 = decoder_param_count(c, DecoderVariant::kDM2, V);
    return ds < ar && ar < dm1 && dm1 < dm2;
  };
  ModelConfig c;
  CHECK(ordered(c));
  c.model_dim = 128;
  c.heads = 8;
  CHECK(ordered(c));
  CHECK(ordered(small_config()));
  ModelConfig broken;
  broken.ds_layers = 4;
  broken.ds_dim = 64;
  CHECK_THROWS_AS(broken.validate(V), ConfigError);
  ModelConfig bad_heads;
  bad_heads.heads = 3;
  CHECK_THROWS_AS(bad_heads.validate(V), ConfigError);
}

TEST_CASE("bundle param counts match the store") {
  const auto v = Vocabulary::toy();
  for (auto variant : {DecoderVariant::kAR, DecoderVariant::kDS, DecoderVariant::kDM1, DecoderVariant::kDM2}) {
    ModelBundle m(v, small_config(), variant, 1);
    const auto counts = m.param_count();
    CHECK(counts.total() == m.parameters().scalar_count());
    CHECK(counts.decoder == decoder_param_count(small_config(), variant, v.size()));
  }
  CHECK(parse_variant("DM2") == DecoderVariant::kDM2);
  CHECK_THROWS(parse_variant("DM3"));
}

TEST_CASE("output shapes and argument checks") {
  const auto v = Vocabulary::toy();
  const auto cfg = small_config();
  const Spectrum s = prepared(v, "GASP");
  ModelBundle ar(v, cfg, DecoderVariant::kAR, 2);
  const auto enc = ar.encode_spectrum(s);
  CHECK(enc.memory.rows() == s.peaks.size() + 1);
  CHECK(enc.precursor_mass == doctest::Approx(s.precursor_neutral_mass()));
  const std::vector<TokenId> prefix{3, 4};
  CHECK(ar.ar_logits(enc, prefix).rows() == 3);
  CHECK(ar.ar_logits(enc, prefix).cols() == static_cast<std::size_t>(v.size()));
  CHECK(ar.ar_decode_step(enc, prefix).rows() == 1);
  const std::vector<TokenId> masked{3, Vocabulary::kMask};
  CHECK_THROWS_AS(ar.ar_logits(enc, masked), DomainError);
  const std::vector<TokenId> full(6, 3);
  CHECK_THROWS_AS(ar.ar_decode_step(enc, full), DomainError);
  CHECK_THROWS_AS(ar.diffusion_denoise(enc, full, 1), DomainError);

  ModelBundle dm(v, cfg, DecoderVariant::kDM2, 2);
  const auto denc = dm.encode_spectrum(s);
  const std::vector<TokenId> canvas(6, Vocabulary::kMask);
  CHECK(dm.diffusion_denoise(denc, canvas, 10).rows() == 6);
  CHECK_THROWS_AS(dm.diffusion_denoise(denc, std::vector<TokenId>(5, 2), 3), DimensionError);
  CHECK_THROWS_AS(dm.diffusion_denoise(denc, canvas, 0), DomainError);

  Spectrum empty = s;
  empty.peaks.clear();
  CHECK_THROWS_AS(ar.encode_spectrum(empty), DomainError);
}

TEST_CASE("AR logits are causal") {
  const auto v = Vocabulary::toy();
  ModelBundle ar(v, small_config(), DecoderVariant::kAR, 3);
  ad::NoGradGuard g;
  const auto enc = ar.encode_spectrum(prepared(v, "GAS"));
  const auto a = ar.ar_logits(enc, std::vector<TokenId>{3, 4, 5});
  const auto b = ar.ar_logits(enc, std::vector<TokenId>{3, 4, 7});
  for (std::size_t c = 0; c < a.cols(); ++c) {
    CHECK(a.at(0, c) == b.at(0, c));
    CHECK(a.at(2, c) == b.at(2, c));
  }
  bool differs = false;
  for (std::size_t c = 0; c < a.cols(); ++c) differs = differs || a.at(3, c) != b.at(3, c);
  CHECK(differs);
  const auto step = ar.ar_decode_step(enc, std::vector<TokenId>{3, 4});
  for (std::size_t c = 0; c < a.cols(); ++c) CHECK(step.at(0, c) == doctest::Approx(a.at(2, c)).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip") {
  const auto v = Vocabulary::toy();
  for (auto variant : {DecoderVariant::kAR, DecoderVariant::kDM2}) {
    ModelBundle m(v, small_config(), variant, 4);
    std::stringstream ss;
    m.save(ss);
    const ModelBundle back = ModelBundle::load(ss);
    CHECK(back.variant() == variant);
    CHECK(back.vocab() == v);
    CHECK(back.config().model_dim == 16);
    const auto& pa = m.parameters().entries();
    const auto& pb = back.parameters().entries();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].first == pb[i].first);
      CHECK(std::equal(pa[i].second.data().begin(), pa[i].second.data().end(), pb[i].second.data().begin()));
    }
  }
  std::stringstream junk("not a checkpoint\n");
  CHECK_THROWS(ModelBundle::load(junk));
}

TEST_CASE("gradcheck: full models, sampled coordinates") {
  const auto v = Vocabulary::toy();
  const Spectrum s = prepared(v, "GASV");
  const std::vector<int> targets{3, 4, 5, 7, Vocabulary::kStop};
  for (auto variant : {DecoderVariant::kAR, DecoderVariant::kDS, DecoderVariant::kDM1, DecoderVariant::kDM2}) {
    INFO(to_string(variant));
    ModelBundle m(v, small_config(), variant, 5);
    std::function<Tensor()> loss;
    if (variant == DecoderVariant::kAR) {
      const std::vector<TokenId> prefix{3, 4, 5, 7};
      loss = [&, prefix] { return cross_entropy(m.ar_logits(m.encode_spectrum(s), prefix), targets); };
    } else {
      const std::vector<TokenId> canvas{3, Vocabulary::kMask, 5, Vocabulary::kMask, Vocabulary::kMask, 0};
      const std::vector<int> t{kIgnoreTarget, 4, kIgnoreTarget, 7, Vocabulary::kStop, kIgnoreTarget};
      loss = [&, canvas, t] { return cross_entropy(m.diffusion_denoise(m.encode_spectrum(s), canvas, 6), t); };
    }
    const auto r = testutil::grad_check(loss, params_of(m), 97);
    INFO(r.where);
    CHECK(r.checked > 50);
    CHECK(r.worst < testutil::kGradTol);
  }
}
