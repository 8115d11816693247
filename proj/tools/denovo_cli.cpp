// denovo: synth / train / predict / evaluate / compare / grid.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "denovo/config.hpp"
#include "denovo/errors.hpp"
#include "denovo/experiment.hpp"
#include "denovo/metrics.hpp"
#include "denovo/predict.hpp"
#include "denovo/training.hpp"

namespace fs = std::filesystem;
using namespace denovo;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

RunConfig load(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? parse_run_config("{}") : load_run_config(c.config_path);
  if (c.seed) cfg.set_seed(*c.seed);
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON run config")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Seed for every random stream of the run");
  app->add_option("--jobs", c.jobs, "Worker threads for decoding")->check(CLI::PositiveNumber);
}

std::vector<Spectrum> load_spectra(const std::string& path, const RunConfig& cfg, const Vocabulary& vocab) {
  auto spectra = read_mgf_file(path, vocab);
  for (auto& s : spectra) s = preprocess(s, cfg.preprocess);
  return spectra;
}

void print_report(const EvalReport& r) {
  std::printf("spectra %d predicted %d unpredicted %d filtered %d\n", r.total_spectra, r.predicted_spectra,
              r.unpredicted_spectra, r.filtered_spectra);
  std::printf("peptide_precision %.4f peptide_coverage %.4f aa_precision %.4f aa_recall %.4f%s\n",
              r.peptide_precision, r.peptide_coverage, r.aa_precision, r.aa_recall,
              r.precision_undefined ? " (precision undefined: no predictions)" : "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"De novo peptide sequencing with autoregressive and diffusion decoders"};
  app.require_subcommand(1);

  Common common;

  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write synthetic train/val/test MGF files and a manifest");
  add_common(synth, common);
  synth->add_option("--out", synth_out, "Output directory")->required();

  std::string train_mgf, val_mgf, train_ckpt, history_path;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, common);
  train_cmd->add_option("--train", train_mgf, "Annotated training MGF")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--val", val_mgf, "Annotated validation MGF")->check(CLI::ExistingFile);
  train_cmd->add_option("--checkpoint", train_ckpt, "Checkpoint to write")->required();
  train_cmd->add_option("--history", history_path, "Training history (JSON lines); default <checkpoint>.history.jsonl");

  std::string pred_ckpt, pred_mgf, pred_out, decoder_name;
  std::optional<int> beam_width;
  std::optional<double> tolerance_ppm;
  bool stop_truncate = false;
  auto* predict_cmd = app.add_subcommand("predict", "Decode spectra with a trained model");
  add_common(predict_cmd, common);
  predict_cmd->add_option("--checkpoint", pred_ckpt, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--mgf", pred_mgf, "Spectra to decode")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", pred_out, "Predictions file")->required();
  predict_cmd->add_option("--decoder", decoder_name, "greedy, beam, knapsack-beam or diffusion")
      ->check(CLI::IsMember({"greedy", "beam", "knapsack-beam", "diffusion"}));
  predict_cmd->add_option("--beam-width", beam_width, "Beam width")->check(CLI::PositiveNumber);
  predict_cmd->add_option("--tolerance-ppm", tolerance_ppm, "Precursor tolerance (ppm)")->check(CLI::PositiveNumber);
  predict_cmd->add_flag("--stop-truncate", stop_truncate, "Cut denoised canvases at the first STOP");

  std::string eval_pred, eval_mgf, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against annotations");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--predictions", eval_pred, "Predictions file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mgf", eval_mgf, "Annotated spectra")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "Report to write")->required();

  std::string cmp_a, cmp_b, label_a = "A", label_b = "B";
  auto* compare_cmd = app.add_subcommand("compare", "Metric deltas and a signed-rank test between two reports");
  add_common(compare_cmd, common);
  compare_cmd->add_option("a", cmp_a, "Baseline report")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("b", cmp_b, "Candidate report")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--label-a", label_a, "Row label for the baseline");
  compare_cmd->add_option("--label-b", label_b, "Row label for the candidate");

  std::string grid_out;
  auto* grid_cmd = app.add_subcommand("grid", "Run the decoder / knapsack / loss experiment grid");
  add_common(grid_cmd, common);
  grid_cmd->add_option("--out", grid_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      const RunConfig cfg = load(common);
      const SplitFiles f = write_synthetic_splits(cfg, synth_out);
      std::printf("train %d  val %d  test %d spectra written to %s\n", f.train_count, f.validation_count,
                  f.test_count, synth_out.c_str());
    } else if (*train_cmd) {
      const RunConfig cfg = load(common);
      const Vocabulary vocab = cfg.vocab();
      const auto train_set = read_mgf_file(train_mgf, vocab);
      std::vector<Spectrum> val_set;
      if (!val_mgf.empty()) val_set = read_mgf_file(val_mgf, vocab);
      ModelBundle model(vocab, cfg.model, cfg.variant, cfg.seed);
      const auto counts = model.param_count();
      std::printf("%s: encoder %zu, decoder %zu parameters\n", to_string(cfg.variant).c_str(), counts.encoder,
                  counts.decoder);
      TrainConfig tc = cfg.train;
      tc.checkpoint_path = train_ckpt;
      PredictOptions decode = cfg.predict_options();
      decode.jobs = common.jobs;
      const auto history = train(model, train_set, val_set, tc, cfg.preprocess, decode, [](const EpochRecord& r) {
        std::printf("epoch %d steps %d train_loss %.6f", r.epoch, r.steps, r.train_loss);
        if (r.val_loss) std::printf(" val_loss %.6f", *r.val_loss);
        if (r.val_aa_precision) std::printf(" val_aa_precision %.4f val_aa_recall %.4f", *r.val_aa_precision,
                                            *r.val_aa_recall);
        std::printf(" %.1fs\n", r.seconds);
        std::fflush(stdout);
      });
      write_history_file(history_path.empty() ? train_ckpt + ".history.jsonl" : history_path, history);
      model.save_file(train_ckpt);
    } else if (*predict_cmd) {
      RunConfig cfg = load(common);
      const ModelBundle model = ModelBundle::load_file(pred_ckpt);
      cfg.variant = model.variant();
      if (!decoder_name.empty()) cfg.search.decoder = decoder_name;
      PredictOptions opt = cfg.predict_options();
      if (beam_width) opt.beam_width = *beam_width;
      if (tolerance_ppm) opt.tolerance_ppm = *tolerance_ppm;
      if (stop_truncate) opt.stop_truncate = true;
      opt.jobs = common.jobs;
      check_decoder(model.variant(), opt.decoder);
      const auto spectra = load_spectra(pred_mgf, cfg, model.vocab());
      std::optional<KnapsackTable> table;
      if (opt.decoder == DecoderKind::kKnapsackBeam) {
        table = cfg.search.knapsack_cache_dir.empty()
                    ? KnapsackTable::build(model.vocab(), cfg.search.knapsack_resolution,
                                           cfg.search.knapsack_max_mass)
                    : KnapsackTable::load_or_build(cfg.search.knapsack_cache_dir, model.vocab(),
                                                   cfg.search.knapsack_resolution, cfg.search.knapsack_max_mass);
      }
      const auto preds = predict(model, spectra, opt, table ? &*table : nullptr);
      write_predictions_file(pred_out, model.vocab(), preds);
      double total = 0.0;
      int predicted = 0;
      for (const auto& p : preds) {
        total += p.seconds;
        predicted += p.peptide && !p.filtered ? 1 : 0;
      }
      std::printf("decoder %s: %zu spectra, %d predicted, %.6f s per spectrum\n", to_string(opt.decoder).c_str(),
                  preds.size(), predicted, preds.empty() ? 0.0 : total / static_cast<double>(preds.size()));
    } else if (*eval_cmd) {
      const RunConfig cfg = load(common);
      const Vocabulary vocab = cfg.vocab();
      const auto preds = read_predictions_file(eval_pred, vocab);
      const auto spectra = read_mgf_file(eval_mgf, vocab);
      const EvalReport report = evaluate(vocab, to_entries(preds, spectra), cfg.metrics);
      write_report_file(eval_out, vocab, report);
      print_report(report);
    } else if (*compare_cmd) {
      const RunConfig cfg = load(common);
      const Vocabulary vocab = cfg.vocab();
      const auto a = read_report_file(cmp_a, vocab, cfg.metrics);
      const auto b = read_report_file(cmp_b, vocab, cfg.metrics);
      std::fputs(format_comparison(compare_reports(a, b, label_a, label_b)).c_str(), stdout);
    } else if (*grid_cmd) {
      const RunConfig cfg = load(common);
      const GridResult g = run_grid(cfg, grid_out, common.jobs, &std::cerr);
      std::fputs(format_grid(g).c_str(), stdout);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
