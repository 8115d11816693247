#include "denovo/config.hpp"
#include "denovo/errors.hpp"
#include "doctest.h"

using namespace denovo;

TEST_CASE("defaults") {
  const auto c = parse_run_config("{}");
  CHECK(c.vocabulary == "toy");
  CHECK(c.variant == DecoderVariant::kAR);
  CHECK(c.decoder() == DecoderKind::kBeam);
  CHECK(c.search.beam_width == 5);
  CHECK(c.train.schedule.steps == 10);
  CHECK(c.metrics.prefix_da == 0.5);
  // The dump re-parses to the same document.
  CHECK(dump_run_config(parse_run_config(dump_run_config(c))) == dump_run_config(c));
}

TEST_CASE("sections override fields") {
  const auto c = parse_run_config(R"({
    "seed": 9,
    "model": {"variant": "DM2", "max_len": 8},
    "train": {"loss": "weighted_entropy", "lambda_entropy": 0.2, "loss_positions": "all"},
    "diffusion": {"steps": 4, "stop_truncate": true},
    "search": {"beam_width": 3}
  })");
  CHECK(c.seed == 9);
  CHECK(c.train.seed == 9);
  CHECK(c.synth.seed == 9);
  CHECK(c.variant == DecoderVariant::kDM2);
  CHECK(c.decoder() == DecoderKind::kDiffusion);
  CHECK(c.model.max_len == 8);
  CHECK(c.train.loss.kind == LossKind::kWeightedEntropy);
  CHECK(c.train.loss.positions == LossPositions::kAll);
  const auto opt = c.predict_options();
  CHECK(opt.stop_truncate);
  CHECK(opt.schedule.steps == 4);
  CHECK(opt.beam_width == 3);
}

TEST_CASE("invalid configs") {
  try {
    parse_run_config(R"({"train": {"epoch": 3}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("train.epoch") != std::string::npos);
    CHECK(msg.find("epochs") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"synth": {"min_length": 5, "max_length": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"variant": "AR"}, "search": {"decoder": "diffusion"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"vocabulary": {"kind": "huge"}})"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), IoError);
}
