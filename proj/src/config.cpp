#include "denovo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "denovo/errors.hpp"
#include "json.hpp"

namespace denovo {

using nlohmann::json;

Vocabulary RunConfig::vocab() const {
  if (vocabulary == "toy") return Vocabulary::toy();
  if (vocabulary == "standard") return Vocabulary::standard();
  throw ConfigError("vocabulary.kind must be 'toy' or 'standard', got '" + vocabulary + "'");
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  synth.seed = s;
}

DecoderKind RunConfig::decoder() const {
  return search.decoder.empty() ? default_decoder(variant) : parse_decoder_kind(search.decoder);
}

PredictOptions RunConfig::predict_options() const {
  PredictOptions o;
  o.decoder = decoder();
  o.beam_width = search.beam_width;
  o.tolerance_ppm = search.tolerance_ppm;
  o.suffix_check = search.suffix_check;
  o.stop_truncate = stop_truncate;
  o.delta_filter = search.delta_filter;
  o.schedule = train.schedule;
  return o;
}

void RunConfig::validate() const {
  const Vocabulary v = vocab();
  preprocess.validate();
  model.validate(static_cast<int>(v.size()));
  train.validate();
  check_decoder(variant, decoder());
  if (search.beam_width < 1) throw ConfigError("search.beam_width must be >= 1");
  if (!(search.tolerance_ppm > 0)) throw ConfigError("search.tolerance_ppm must be > 0");
  if (!(search.knapsack_resolution > 0 && search.knapsack_resolution <= KnapsackTable::kCoarsestResolution))
    throw ConfigError("search.knapsack_resolution must be in (0, 0.01]");
  if (!(search.knapsack_max_mass > 0)) throw ConfigError("search.knapsack_max_mass must be > 0");
  if (!(metrics.prefix_da >= 0 && metrics.residue_da >= 0)) throw ConfigError("metrics tolerances must be >= 0");
  synth.validate();
  if (synth.max_length > model.max_len) throw ConfigError("synth.max_length exceeds model.max_len");
  if (synth_count < 1) throw ConfigError("synth.count must be >= 1");
}

namespace {

std::string join(const std::set<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) out += (out.empty() ? "" : ", ") + k;
  return out;
}

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& valid) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!valid.count(key))
      throw ConfigError("unknown key '" + (section.empty() ? key : section + "." + key) + "' (valid: " + join(valid) + ")");
}

template <typename T>
void get(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad type for '" + section + "." + key + "'");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  check_keys(root, "",
             {"seed", "vocabulary", "preprocess", "model", "train", "diffusion", "search", "metrics", "synth"});
  if (root.contains("seed")) {
    std::uint64_t s = cfg.seed;
    get(root, "seed", s, "");
    cfg.set_seed(s);
  }
  if (root.contains("vocabulary")) {
    const auto& j = root["vocabulary"];
    check_keys(j, "vocabulary", {"kind"});
    get(j, "kind", cfg.vocabulary, "vocabulary");
  }
  if (root.contains("preprocess")) {
    const auto& j = root["preprocess"];
    check_keys(j, "preprocess", {"max_peaks", "mz_min", "mz_max", "precursor_exclusion"});
    get(j, "max_peaks", cfg.preprocess.max_peaks, "preprocess");
    get(j, "mz_min", cfg.preprocess.mz_min, "preprocess");
    get(j, "mz_max", cfg.preprocess.mz_max, "preprocess");
    get(j, "precursor_exclusion", cfg.preprocess.precursor_exclusion, "preprocess");
  }
  if (root.contains("model")) {
    const auto& j = root["model"];
    check_keys(j, "model",
               {"variant", "model_dim", "heads", "encoder_layers", "ar_layers", "ds_layers", "ds_dim", "dm_layers",
                "ff_mult", "max_len", "max_charge", "mz_min_wavelength", "mz_max_wavelength"});
    std::string variant = to_string(cfg.variant);
    get(j, "variant", variant, "model");
    try {
      cfg.variant = parse_variant(variant);
    } catch (const Error& e) {
      throw ConfigError(std::string("model.variant: ") + e.what());
    }
    auto& m = cfg.model;
    get(j, "model_dim", m.model_dim, "model");
    get(j, "heads", m.heads, "model");
    get(j, "encoder_layers", m.encoder_layers, "model");
    get(j, "ar_layers", m.ar_layers, "model");
    get(j, "ds_layers", m.ds_layers, "model");
    get(j, "ds_dim", m.ds_dim, "model");
    get(j, "dm_layers", m.dm_layers, "model");
    get(j, "ff_mult", m.ff_mult, "model");
    get(j, "max_len", m.max_len, "model");
    get(j, "max_charge", m.max_charge, "model");
    get(j, "mz_min_wavelength", m.mz_min_wavelength, "model");
    get(j, "mz_max_wavelength", m.mz_max_wavelength, "model");
  }
  if (root.contains("train")) {
    const auto& j = root["train"];
    check_keys(j, "train",
               {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "validation_interval",
                "time_budget_seconds", "loss", "lambda_entropy", "sigma_min", "sigma_max", "loss_positions"});
    auto& t = cfg.train;
    get(j, "epochs", t.epochs, "train");
    get(j, "batch_size", t.batch_size, "train");
    get(j, "learning_rate", t.optimizer.learning_rate, "train");
    get(j, "beta1", t.optimizer.beta1, "train");
    get(j, "beta2", t.optimizer.beta2, "train");
    get(j, "epsilon", t.optimizer.epsilon, "train");
    get(j, "validation_interval", t.validation_interval, "train");
    get(j, "time_budget_seconds", t.time_budget_seconds, "train");
    std::string loss = to_string(t.loss.kind);
    get(j, "loss", loss, "train");
    try {
      t.loss.kind = parse_loss_kind(loss);
    } catch (const Error& e) {
      throw ConfigError(std::string("train.loss: ") + e.what());
    }
    get(j, "lambda_entropy", t.loss.lambda_entropy, "train");
    get(j, "sigma_min", t.loss.sigma_min, "train");
    get(j, "sigma_max", t.loss.sigma_max, "train");
    std::string positions = t.loss.positions == LossPositions::kAll ? "all" : "masked";
    get(j, "loss_positions", positions, "train");
    if (positions == "all") {
      t.loss.positions = LossPositions::kAll;
    } else if (positions == "masked") {
      t.loss.positions = LossPositions::kMaskedOnly;
    } else {
      throw ConfigError("train.loss_positions must be 'masked' or 'all'");
    }
  }
  if (root.contains("diffusion")) {
    const auto& j = root["diffusion"];
    check_keys(j, "diffusion", {"steps", "stop_truncate"});
    get(j, "steps", cfg.train.schedule.steps, "diffusion");
    get(j, "stop_truncate", cfg.stop_truncate, "diffusion");
  }
  if (root.contains("search")) {
    const auto& j = root["search"];
    check_keys(j, "search",
               {"decoder", "beam_width", "tolerance_ppm", "suffix_check", "delta_filter", "knapsack_resolution",
                "knapsack_max_mass", "knapsack_cache_dir"});
    auto& s = cfg.search;
    get(j, "decoder", s.decoder, "search");
    if (!s.decoder.empty()) parse_decoder_kind(s.decoder);
    get(j, "beam_width", s.beam_width, "search");
    get(j, "tolerance_ppm", s.tolerance_ppm, "search");
    get(j, "suffix_check", s.suffix_check, "search");
    get(j, "delta_filter", s.delta_filter, "search");
    get(j, "knapsack_resolution", s.knapsack_resolution, "search");
    get(j, "knapsack_max_mass", s.knapsack_max_mass, "search");
    get(j, "knapsack_cache_dir", s.knapsack_cache_dir, "search");
  }
  if (root.contains("metrics")) {
    const auto& j = root["metrics"];
    check_keys(j, "metrics", {"prefix_tolerance_da", "residue_tolerance_da"});
    get(j, "prefix_tolerance_da", cfg.metrics.prefix_da, "metrics");
    get(j, "residue_tolerance_da", cfg.metrics.residue_da, "metrics");
  }
  if (root.contains("synth")) {
    const auto& j = root["synth"];
    check_keys(j, "synth",
               {"count", "min_length", "max_length", "charges", "noise_peaks", "peak_dropout", "mz_jitter"});
    get(j, "count", cfg.synth_count, "synth");
    get(j, "min_length", cfg.synth.min_length, "synth");
    get(j, "max_length", cfg.synth.max_length, "synth");
    get(j, "charges", cfg.synth.charges, "synth");
    get(j, "noise_peaks", cfg.synth.noise_peaks, "synth");
    get(j, "peak_dropout", cfg.synth.peak_dropout, "synth");
    get(j, "mz_jitter", cfg.synth.mz_jitter, "synth");
  }
  cfg.synth.vocab = cfg.vocab();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["vocabulary"] = {{"kind", c.vocabulary}};
  j["preprocess"] = {{"max_peaks", c.preprocess.max_peaks},
                     {"mz_min", c.preprocess.mz_min},
                     {"mz_max", c.preprocess.mz_max},
                     {"precursor_exclusion", c.preprocess.precursor_exclusion}};
  const auto& m = c.model;
  j["model"] = {{"variant", to_string(c.variant)},
                {"model_dim", m.model_dim},
                {"heads", m.heads},
                {"encoder_layers", m.encoder_layers},
                {"ar_layers", m.ar_layers},
                {"ds_layers", m.ds_layers},
                {"ds_dim", m.ds_dim},
                {"dm_layers", m.dm_layers},
                {"ff_mult", m.ff_mult},
                {"max_len", m.max_len},
                {"max_charge", m.max_charge},
                {"mz_min_wavelength", m.mz_min_wavelength},
                {"mz_max_wavelength", m.mz_max_wavelength}};
  const auto& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.optimizer.learning_rate},
                {"beta1", t.optimizer.beta1},
                {"beta2", t.optimizer.beta2},
                {"epsilon", t.optimizer.epsilon},
                {"validation_interval", t.validation_interval},
                {"time_budget_seconds", t.time_budget_seconds},
                {"loss", to_string(t.loss.kind)},
                {"lambda_entropy", t.loss.lambda_entropy},
                {"sigma_min", t.loss.sigma_min},
                {"sigma_max", t.loss.sigma_max},
                {"loss_positions", t.loss.positions == LossPositions::kAll ? "all" : "masked"}};
  j["diffusion"] = {{"steps", t.schedule.steps}, {"stop_truncate", c.stop_truncate}};
  const auto& s = c.search;
  j["search"] = {{"decoder", s.decoder},
                 {"beam_width", s.beam_width},
                 {"tolerance_ppm", s.tolerance_ppm},
                 {"suffix_check", s.suffix_check},
                 {"delta_filter", s.delta_filter},
                 {"knapsack_resolution", s.knapsack_resolution},
                 {"knapsack_max_mass", s.knapsack_max_mass},
                 {"knapsack_cache_dir", s.knapsack_cache_dir}};
  j["metrics"] = {{"prefix_tolerance_da", c.metrics.prefix_da}, {"residue_tolerance_da", c.metrics.residue_da}};
  j["synth"] = {{"count", c.synth_count},
                {"min_length", c.synth.min_length},
                {"max_length", c.synth.max_length},
                {"charges", c.synth.charges},
                {"noise_peaks", c.synth.noise_peaks},
                {"peak_dropout", c.synth.peak_dropout},
                {"mz_jitter", c.synth.mz_jitter}};
  return j.dump(2) + "\n";
}

}  // namespace denovo
