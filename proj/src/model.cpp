#include "denovo/model.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "denovo/checkpoint.hpp"
#include "denovo/errors.hpp"
#include "json.hpp"

namespace denovo {

using ad::Tensor;
using nn::FeedForward;
using nn::LayerNorm;
using nn::Linear;
using nn::MultiHeadAttention;
using nn::ParameterStore;

namespace {

constexpr double kTimestepMinWavelength = 3.0;
constexpr double kTimestepMaxWavelength = 300.0;

Tensor constant_row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::from(1, n, std::move(v));
}

std::size_t dim_of(const ModelConfig& cfg) { return static_cast<std::size_t>(cfg.model_dim); }

struct EncoderLayer {
  LayerNorm ln_attn, ln_ff;
  MultiHeadAttention self_attn;
  FeedForward ff;
};

struct Encoder {
  Linear intensity;
  Tensor charge_embedding;  // [max_charge + 1, dim]
  std::vector<EncoderLayer> layers;
  LayerNorm final_ln;

  Encoder(ParameterStore& s, const ModelConfig& cfg) {
    const std::size_t d = dim_of(cfg);
    intensity = Linear(s, "encoder.intensity", 1, d);
    charge_embedding = s.add_uniform("encoder.charge_embedding", static_cast<std::size_t>(cfg.max_charge) + 1, d, 1);
    for (int l = 0; l < cfg.encoder_layers; ++l) {
      const std::string p = "encoder.layer" + std::to_string(l);
      layers.push_back({LayerNorm(s, p + ".ln_attn", d), LayerNorm(s, p + ".ln_ff", d),
                        MultiHeadAttention(s, p + ".self_attn", d, d, cfg.heads),
                        FeedForward(s, p + ".ff", d, d * static_cast<std::size_t>(cfg.ff_mult))});
    }
    final_ln = LayerNorm(s, "encoder.final_ln", d);
  }
};

struct DecoderLayer {
  LayerNorm ln_self, ln_cross, ln_ff;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ff;
  // DM2 only: maps the timestep embedding to (shift, scale) per layer norm.
  Linear mod_self, mod_cross, mod_ff;
};

struct Decoder {
  DecoderVariant variant;
  std::size_t dim;
  Tensor token_embedding;     // [vocab, dim]
  Tensor position_embedding;  // [positions, dim]
  Tensor start;               // AR only
  Linear time_proj;           // diffusion only
  Linear precursor_proj;      // DM2 only: conditioning row appended to memory
  Linear mod_final;           // DM2 only
  std::vector<DecoderLayer> layers;
  LayerNorm final_ln;
  Linear head;

  Decoder(ParameterStore& s, const ModelConfig& cfg, DecoderVariant v, int vocab_size) : variant(v) {
    const std::size_t mem_dim = dim_of(cfg);
    dim = v == DecoderVariant::kDS ? static_cast<std::size_t>(cfg.ds_dim) : mem_dim;
    int n_layers = cfg.dm_layers;
    if (v == DecoderVariant::kAR) n_layers = cfg.ar_layers;
    if (v == DecoderVariant::kDS) n_layers = cfg.ds_layers;
    const auto V = static_cast<std::size_t>(vocab_size);
    const auto L = static_cast<std::size_t>(cfg.max_len);
    const bool dm2 = v == DecoderVariant::kDM2;

    token_embedding = s.add_uniform("decoder.token_embedding", V, dim, 1);
    if (v == DecoderVariant::kAR) {
      start = s.add_uniform("decoder.start", 1, dim, 1);
      position_embedding = s.add_uniform("decoder.position_embedding", L + 1, dim, 1);
    } else {
      position_embedding = s.add_uniform("decoder.position_embedding", L, dim, 1);
      time_proj = Linear(s, "decoder.time_proj", dim, dim);
    }
    if (dm2) precursor_proj = Linear(s, "decoder.precursor_proj", mem_dim, mem_dim);
    for (int l = 0; l < n_layers; ++l) {
      const std::string p = "decoder.layer" + std::to_string(l);
      DecoderLayer layer{LayerNorm(s, p + ".ln_self", dim),
                         LayerNorm(s, p + ".ln_cross", dim),
                         LayerNorm(s, p + ".ln_ff", dim),
                         MultiHeadAttention(s, p + ".self_attn", dim, dim, cfg.heads),
                         MultiHeadAttention(s, p + ".cross_attn", dim, mem_dim, cfg.heads),
                         FeedForward(s, p + ".ff", dim, dim * static_cast<std::size_t>(cfg.ff_mult)),
                         {}, {}, {}};
      if (dm2) {
        layer.mod_self = Linear(s, p + ".mod_self", dim, 2 * dim);
        layer.mod_cross = Linear(s, p + ".mod_cross", dim, 2 * dim);
        layer.mod_ff = Linear(s, p + ".mod_ff", dim, 2 * dim);
      }
      layers.push_back(std::move(layer));
    }
    final_ln = LayerNorm(s, "decoder.final_ln", dim);
    if (dm2) mod_final = Linear(s, "decoder.mod_final", dim, 2 * dim);
    head = Linear(s, "decoder.head", dim, V);
  }

  Tensor norm(const LayerNorm& ln, const Linear& mod, const Tensor& x, const Tensor& cond) const {
    if (!mod.weight.defined()) return ln(x);
    const Tensor m = mod(cond);
    return ln(x, ad::slice_cols(m, 0, dim), ad::slice_cols(m, dim, 2 * dim));
  }

  Tensor run(Tensor x, const Tensor& memory, const Tensor& self_mask, const Tensor& cond) const {
    for (const auto& layer : layers) {
      Tensor h = norm(layer.ln_self, layer.mod_self, x, cond);
      x = ad::add(x, layer.self_attn(h, h, self_mask));
      h = norm(layer.ln_cross, layer.mod_cross, x, cond);
      x = ad::add(x, layer.cross_attn(h, memory, Tensor{}));
      h = norm(layer.ln_ff, layer.mod_ff, x, cond);
      x = ad::add(x, layer.ff(h));
    }
    return head(norm(final_ln, mod_final, x, cond));
  }
};

void check_shapes(const ModelConfig& cfg, int vocab_size) {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model.") + name + " must be >= 1");
  };
  positive(cfg.model_dim, "model_dim");
  positive(cfg.heads, "heads");
  positive(cfg.encoder_layers, "encoder_layers");
  positive(cfg.ar_layers, "ar_layers");
  positive(cfg.ds_layers, "ds_layers");
  positive(cfg.ds_dim, "ds_dim");
  positive(cfg.dm_layers, "dm_layers");
  positive(cfg.ff_mult, "ff_mult");
  positive(cfg.max_len, "max_len");
  positive(cfg.max_charge, "max_charge");
  if (cfg.model_dim % 2 != 0 || cfg.ds_dim % 2 != 0) throw ConfigError("model dims must be even");
  if (cfg.model_dim % cfg.heads != 0) throw ConfigError("model.heads must divide model_dim");
  if (cfg.ds_dim % cfg.heads != 0) throw ConfigError("model.heads must divide ds_dim");
  if (!(cfg.mz_min_wavelength > 0 && cfg.mz_max_wavelength > cfg.mz_min_wavelength))
    throw ConfigError("model: invalid m/z wavelength range");
  if (vocab_size < Vocabulary::kFirstResidue + 1) throw ConfigError("model: vocabulary has no residues");
}

}  // namespace

std::string to_string(DecoderVariant v) {
  switch (v) {
    case DecoderVariant::kAR: return "AR";
    case DecoderVariant::kDS: return "DS";
    case DecoderVariant::kDM1: return "DM1";
    case DecoderVariant::kDM2: return "DM2";
  }
  return "?";
}

DecoderVariant parse_variant(const std::string& text) {
  if (text == "AR") return DecoderVariant::kAR;
  if (text == "DS") return DecoderVariant::kDS;
  if (text == "DM1") return DecoderVariant::kDM1;
  if (text == "DM2") return DecoderVariant::kDM2;
  throw ConfigError("unknown decoder variant '" + text + "' (valid: AR, DS, DM1, DM2)");
}

std::size_t decoder_param_count(const ModelConfig& cfg, DecoderVariant variant, int vocab_size) {
  check_shapes(cfg, vocab_size);
  ParameterStore scratch(0);
  Decoder dec(scratch, cfg, variant, vocab_size);
  return scratch.scalar_count();
}

void ModelConfig::validate(int vocab_size) const {
  check_shapes(*this, vocab_size);
  const auto ds = decoder_param_count(*this, DecoderVariant::kDS, vocab_size);
  const auto ar = decoder_param_count(*this, DecoderVariant::kAR, vocab_size);
  const auto dm1 = decoder_param_count(*this, DecoderVariant::kDM1, vocab_size);
  const auto dm2 = decoder_param_count(*this, DecoderVariant::kDM2, vocab_size);
  if (!(ds < ar && ar < dm1 && dm1 < dm2)) {
    throw ConfigError("model config breaks decoder size ordering DS < AR < DM1 < DM2 (" + std::to_string(ds) +
                      ", " + std::to_string(ar) + ", " + std::to_string(dm1) + ", " + std::to_string(dm2) + ")");
  }
}

struct ModelBundle::Impl {
  Encoder encoder;
  Decoder decoder;
  Impl(ParameterStore& s, const ModelConfig& cfg, DecoderVariant v, int vocab_size)
      : encoder(s, cfg), decoder(s, cfg, v, vocab_size) {}
};

ModelBundle::ModelBundle(Vocabulary vocab, ModelConfig cfg, DecoderVariant variant, std::uint64_t seed)
    : vocab_(std::move(vocab)), cfg_(cfg), variant_(variant), store_(seed) {
  cfg_.validate(vocab_.size());
  impl_ = std::make_unique<Impl>(store_, cfg_, variant_, vocab_.size());
}

ModelBundle::~ModelBundle() = default;
ModelBundle::ModelBundle(ModelBundle&&) noexcept = default;
ModelBundle& ModelBundle::operator=(ModelBundle&&) noexcept = default;

ParamCounts ModelBundle::param_count() const {
  return {store_.scalar_count("encoder."), store_.scalar_count("decoder.")};
}

EncodedSpectrum ModelBundle::encode_spectrum(const Spectrum& spectrum) const {
  if (spectrum.peaks.empty()) throw DomainError("encode_spectrum: empty spectrum '" + spectrum.title + "'");
  if (spectrum.charge < 1 || spectrum.charge > cfg_.max_charge) {
    throw DomainError("encode_spectrum: charge " + std::to_string(spectrum.charge) + " outside [1, " +
                      std::to_string(cfg_.max_charge) + "]");
  }
  const Encoder& enc = impl_->encoder;
  const std::size_t d = dim_of(cfg_);
  const std::size_t k = spectrum.peaks.size();

  std::vector<double> mz_features;
  mz_features.reserve(k * d);
  std::vector<double> intensities(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto e = nn::sinusoidal_embed(spectrum.peaks[i].mz, d, cfg_.mz_min_wavelength, cfg_.mz_max_wavelength);
    mz_features.insert(mz_features.end(), e.begin(), e.end());
    intensities[i] = spectrum.peaks[i].intensity;
  }
  const Tensor peaks = ad::add(Tensor::from(k, d, std::move(mz_features)),
                               enc.intensity(Tensor::from(k, 1, std::move(intensities))));

  const double mass = spectrum.precursor_neutral_mass();
  const int charge_id[] = {spectrum.charge};
  const Tensor precursor =
      ad::add(constant_row(nn::sinusoidal_embed(mass, d, cfg_.mz_min_wavelength, cfg_.mz_max_wavelength)),
              ad::embedding_lookup(enc.charge_embedding, charge_id));

  Tensor x = ad::concat_rows({precursor, peaks});
  for (const auto& layer : enc.layers) {
    const Tensor h = layer.ln_attn(x);
    x = ad::add(x, layer.self_attn(h, h, Tensor{}));
    x = ad::add(x, layer.ff(layer.ln_ff(x)));
  }
  return {enc.final_ln(x), mass, spectrum.charge};
}

Tensor ModelBundle::ar_logits(const EncodedSpectrum& enc, std::span<const TokenId> prefix) const {
  if (variant_ != DecoderVariant::kAR) throw DomainError("ar_logits on non-autoregressive variant " + to_string(variant_));
  if (prefix.size() > static_cast<std::size_t>(cfg_.max_len)) {
    throw DomainError("AR prefix longer than max_len " + std::to_string(cfg_.max_len));
  }
  for (TokenId t : prefix) {
    if (t == Vocabulary::kMask) throw DomainError("MASK token in autoregressive prefix");
    if (!vocab_.is_residue(t)) throw DomainError("non-residue token " + std::to_string(t) + " in AR prefix");
  }
  const Decoder& dec = impl_->decoder;
  const std::size_t n = prefix.size() + 1;
  Tensor x = dec.start;
  if (!prefix.empty()) x = ad::concat_rows({dec.start, ad::embedding_lookup(dec.token_embedding, prefix)});
  x = ad::add(x, ad::slice_rows(dec.position_embedding, 0, n));
  return dec.run(x, enc.memory, ad::causal_mask(n), Tensor{});
}

Tensor ModelBundle::ar_decode_step(const EncodedSpectrum& enc, std::span<const TokenId> prefix) const {
  if (prefix.size() >= static_cast<std::size_t>(cfg_.max_len)) {
    throw DomainError("ar_decode_step: prefix already at max_len");
  }
  const Tensor all = ar_logits(enc, prefix);
  return ad::slice_rows(all, all.rows() - 1, all.rows());
}

Tensor ModelBundle::diffusion_denoise(const EncodedSpectrum& enc, std::span<const TokenId> canvas, int t) const {
  if (variant_ == DecoderVariant::kAR) throw DomainError("diffusion_denoise on autoregressive variant");
  if (canvas.size() != static_cast<std::size_t>(cfg_.max_len)) {
    throw DimensionError("canvas length " + std::to_string(canvas.size()) + " != max_len " +
                         std::to_string(cfg_.max_len));
  }
  if (t < 1) throw DomainError("diffusion timestep must be >= 1, got " + std::to_string(t));
  for (TokenId tok : canvas) {
    if (tok < 0 || tok >= vocab_.size()) throw VocabularyError("canvas token " + std::to_string(tok) + " out of range");
  }
  const Decoder& dec = impl_->decoder;
  const Tensor temb = dec.time_proj(
      constant_row(nn::sinusoidal_embed(static_cast<double>(t), dec.dim, kTimestepMinWavelength, kTimestepMaxWavelength)));
  Tensor x = ad::add(ad::embedding_lookup(dec.token_embedding, canvas), dec.position_embedding);
  x = ad::add(x, temb);

  Tensor memory = enc.memory;
  if (variant_ == DecoderVariant::kDM2) {
    const std::size_t d = dim_of(cfg_);
    const Tensor cond = dec.precursor_proj(constant_row(
        nn::sinusoidal_embed(enc.precursor_mass, d, cfg_.mz_min_wavelength, cfg_.mz_max_wavelength)));
    memory = ad::concat_rows({memory, cond});
  }
  return dec.run(x, memory, Tensor{}, temb);
}

void ModelBundle::save(std::ostream& out) const {
  nlohmann::json cfg = {
      {"model_dim", cfg_.model_dim},       {"heads", cfg_.heads},
      {"encoder_layers", cfg_.encoder_layers}, {"ar_layers", cfg_.ar_layers},
      {"ds_layers", cfg_.ds_layers},       {"ds_dim", cfg_.ds_dim},
      {"dm_layers", cfg_.dm_layers},       {"ff_mult", cfg_.ff_mult},
      {"max_len", cfg_.max_len},           {"max_charge", cfg_.max_charge},
      {"mz_min_wavelength", cfg_.mz_min_wavelength}, {"mz_max_wavelength", cfg_.mz_max_wavelength},
  };
  out << "denovo-checkpoint 1\n";
  out << "variant " << to_string(variant_) << '\n';
  out << "vocab";
  for (const auto& s : vocab_.residue_symbols()) out << ' ' << s;
  out << '\n';
  out << "toy " << (vocab_.toy_mode() ? 1 : 0) << '\n';
  out << "config " << cfg.dump() << '\n';
  save_parameters(out, store_);
}

void ModelBundle::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save(out);
}

ModelBundle ModelBundle::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "denovo-checkpoint 1") throw ParseError("not a denovo checkpoint (v1)", 1);
  std::string key, variant_text;
  if (!std::getline(in, line)) throw ParseError("truncated checkpoint", 2);
  std::istringstream(line) >> key >> variant_text;
  if (key != "variant") throw ParseError("expected variant line", 2);

  if (!std::getline(in, line) || line.rfind("vocab", 0) != 0) throw ParseError("expected vocab line", 3);
  std::istringstream vs(line.substr(5));
  std::vector<std::string> symbols;
  for (std::string s; vs >> s;) symbols.push_back(s);
  if (!std::getline(in, line) || line.rfind("toy ", 0) != 0) throw ParseError("expected toy line", 4);
  const bool toy = line == "toy 1";
  Vocabulary vocab = toy ? Vocabulary::toy() : Vocabulary::from_symbols(symbols);
  if (vocab.residue_symbols() != symbols) throw ParseError("toy vocabulary mismatch", 4);

  if (!std::getline(in, line) || line.rfind("config ", 0) != 0) throw ParseError("expected config line", 5);
  const auto j = nlohmann::json::parse(line.substr(7));
  ModelConfig cfg;
  cfg.model_dim = j.at("model_dim");
  cfg.heads = j.at("heads");
  cfg.encoder_layers = j.at("encoder_layers");
  cfg.ar_layers = j.at("ar_layers");
  cfg.ds_layers = j.at("ds_layers");
  cfg.ds_dim = j.at("ds_dim");
  cfg.dm_layers = j.at("dm_layers");
  cfg.ff_mult = j.at("ff_mult");
  cfg.max_len = j.at("max_len");
  cfg.max_charge = j.at("max_charge");
  cfg.mz_min_wavelength = j.at("mz_min_wavelength");
  cfg.mz_max_wavelength = j.at("mz_max_wavelength");

  ModelBundle bundle(std::move(vocab), cfg, parse_variant(variant_text), 0);
  load_parameters(in, bundle.store_);
  return bundle;
}

ModelBundle ModelBundle::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return load(in);
}

}  // namespace denovo
