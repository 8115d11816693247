#include "denovo/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "denovo/errors.hpp"

namespace denovo {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(optimizer.learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (validation_interval < 0) throw ConfigError("train.validation_interval must be >= 0");
  if (time_budget_seconds < 0) throw ConfigError("train.time_budget_seconds must be >= 0");
  loss.validate();
  schedule.validate();
}

namespace {

std::vector<Spectrum> prepare(const std::vector<Spectrum>& spectra, const PreprocessConfig& pcfg) {
  std::vector<Spectrum> out;
  out.reserve(spectra.size());
  for (const auto& s : spectra) {
    if (!s.annotation) throw DomainError("training spectrum '" + s.title + "' has no annotation");
    out.push_back(preprocess(s, pcfg));
  }
  return out;
}

}  // namespace

ad::Tensor example_loss(const ModelBundle& model, const Spectrum& spectrum, const TrainConfig& cfg,
                        std::mt19937_64& rng) {
  if (!spectrum.annotation) throw DomainError("spectrum '" + spectrum.title + "' has no annotation");
  const Peptide& truth = *spectrum.annotation;
  const int max_len = model.config().max_len;
  const EncodedSpectrum enc = model.encode_spectrum(spectrum);

  if (!is_diffusion(model.variant())) {
    if (static_cast<int>(truth.length()) > max_len)
      throw DomainError("peptide of '" + spectrum.title + "' exceeds max_len");
    std::vector<int> targets(truth.tokens.begin(), truth.tokens.end());
    targets.push_back(Vocabulary::kStop);
    // Teacher forcing: row i predicts targets[i] from truth[0..i).
    ad::Tensor logits = model.ar_logits(enc, truth.tokens);
    return compute_loss(cfg.loss, logits, targets, rng);
  }

  const auto target = padded_target(truth, max_len);
  std::uniform_int_distribution<int> pick_t(1, cfg.schedule.steps);
  const int t = pick_t(rng);
  Canvas canvas = corrupt(target, t, cfg.schedule, rng);
  std::vector<std::size_t> scorable;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (target[i] != Vocabulary::kPad) scorable.push_back(i);
  bool any_masked = false;
  for (auto i : scorable) any_masked = any_masked || canvas.tokens[i] == Vocabulary::kMask;
  if (!any_masked) {
    std::uniform_int_distribution<std::size_t> pick(0, scorable.size() - 1);
    canvas.tokens[scorable[pick(rng)]] = Vocabulary::kMask;
  }
  const int model_t = cfg.schedule.timestep_for(static_cast<int>(canvas.masked_count()), max_len);
  std::vector<int> targets(target.size(), kIgnoreTarget);
  for (auto i : scorable)
    if (cfg.loss.positions == LossPositions::kAll || canvas.tokens[i] == Vocabulary::kMask) targets[i] = target[i];
  ad::Tensor logits = model.diffusion_denoise(enc, canvas.tokens, std::max(1, model_t));
  return compute_loss(cfg.loss, logits, targets, rng);
}

ValidationResult validate(const ModelBundle& model, const std::vector<Spectrum>& corpus, const TrainConfig& cfg,
                          const PreprocessConfig& preprocess_cfg, const PredictOptions& decode) {
  if (corpus.empty()) throw DomainError("validation corpus is empty");
  const auto spectra = prepare(corpus, preprocess_cfg);
  ValidationResult res;
  {
    ad::NoGradGuard no_grad;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    double total = 0.0;
    for (const auto& s : spectra) total += example_loss(model, s, cfg, rng).item();
    res.loss = total / static_cast<double>(spectra.size());
  }
  KnapsackTable table;
  const KnapsackTable* table_ptr = nullptr;
  if (decode.decoder == DecoderKind::kKnapsackBeam) {
    table = KnapsackTable::build(model.vocab());
    table_ptr = &table;
  }
  const auto preds = predict(model, spectra, decode, table_ptr);
  res.report = evaluate(model.vocab(), to_entries(preds, spectra));
  return res;
}

TrainHistory train(ModelBundle& model, const std::vector<Spectrum>& corpus, const std::vector<Spectrum>& validation,
                   const TrainConfig& cfg, const PreprocessConfig& preprocess_cfg, const PredictOptions& decode,
                   const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.empty()) throw DomainError("training corpus is empty");
  if (!validation.empty()) check_decoder(model.variant(), decode.decoder);
  const auto spectra = prepare(corpus, preprocess_cfg);

  std::vector<ad::Tensor> params;
  for (auto& [name, t] : model.parameters().entries()) params.push_back(t);
  nn::Adam adam(params, cfg.optimizer);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(spectra.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(end - b);
      adam.zero_grad();
      for (std::size_t k = b; k < end; ++k) {
        const Spectrum& s = spectra[order[k]];
        ad::Tensor loss = example_loss(model, s, cfg, rng);
        const double v = loss.item();
        if (!std::isfinite(v))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on spectrum '" + s.title + "'");
        epoch_loss += v;
        ad::scale(loss, inv).backward();
      }
      adam.step();
    }
    if (!model.parameters().all_finite())
      throw NumericError("non-finite parameters after epoch " + std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = static_cast<int>(adam.steps());
    rec.train_loss = epoch_loss / static_cast<double>(spectra.size());
    if (!validation.empty() && cfg.validation_interval > 0 &&
        (epoch % cfg.validation_interval == 0 || epoch == cfg.epochs)) {
      const auto v = validate(model, validation, cfg, preprocess_cfg, decode);
      rec.val_loss = v.loss;
      rec.val_aa_precision = v.report.aa_precision;
      rec.val_aa_recall = v.report.aa_recall;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(rec);
    if (!cfg.checkpoint_path.empty()) model.save_file(cfg.checkpoint_path);
    if (on_epoch) on_epoch(rec);
    if (cfg.time_budget_seconds > 0 && rec.seconds >= cfg.time_budget_seconds) break;
  }
  return history;
}

void write_history(std::ostream& out, const TrainHistory& history) {
  for (const auto& r : history.epochs) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["steps"] = r.steps;
    j["train_loss"] = r.train_loss;
    if (r.val_loss) j["val_loss"] = *r.val_loss;
    if (r.val_aa_precision) j["val_aa_precision"] = *r.val_aa_precision;
    if (r.val_aa_recall) j["val_aa_recall"] = *r.val_aa_recall;
    j["seconds"] = r.seconds;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing training history");
}

void write_history_file(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_history(out, history);
}

}  // namespace denovo
