#include "denovo/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "denovo/errors.hpp"
#include "denovo/predict.hpp"
#include "denovo/synthgen.hpp"
#include "denovo/training.hpp"
#include "json.hpp"

namespace denovo {

namespace fs = std::filesystem;

Comparison compare_reports(const EvalReport& a, const EvalReport& b, const std::string& label_a,
                           const std::string& label_b) {
  std::map<std::string, double> recall_a;
  for (const auto& r : a.records) recall_a[r.spectrum_id] = r.aa_recall();
  if (recall_a.size() != b.records.size()) throw DomainError("compare: reports cover different spectrum sets");
  std::vector<double> xa, xb;
  for (const auto& r : b.records) {
    const auto it = recall_a.find(r.spectrum_id);
    if (it == recall_a.end()) throw DomainError("compare: spectrum '" + r.spectrum_id + "' missing from " + label_a);
    xa.push_back(it->second);
    xb.push_back(r.aa_recall());
  }
  Comparison c;
  c.label_a = label_a;
  c.label_b = label_b;
  c.a = a;
  c.b = b;
  c.delta_peptide_precision = b.peptide_precision - a.peptide_precision;
  c.delta_peptide_coverage = b.peptide_coverage - a.peptide_coverage;
  c.delta_aa_precision = b.aa_precision - a.aa_precision;
  c.delta_aa_recall = b.aa_recall - a.aa_recall;
  if (xa.empty()) {
    c.undefined_reason = "no spectra";
    return c;
  }
  try {
    c.test = wilcoxon_signed_rank(xb, xa);
  } catch (const UndefinedTestError& e) {
    c.undefined_reason = e.what();
  }
  return c;
}

namespace {

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string signed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.3f", v);
  return buf;
}

std::string metrics_cells(const EvalReport& r) {
  return f3(r.peptide_precision) + " | " + f3(r.peptide_coverage) + " | " + f3(r.aa_precision) + " | " +
         f3(r.aa_recall);
}

}  // namespace

std::string format_comparison(const Comparison& c) {
  std::ostringstream out;
  out << "| Model | Peptide precision | Peptide coverage | AA precision | AA recall |\n";
  out << "|---|---|---|---|---|\n";
  out << "| " << c.label_a << " | " << metrics_cells(c.a) << " |\n";
  out << "| " << c.label_b << " | " << metrics_cells(c.b) << " |\n";
  out << "| delta | " << signed3(c.delta_peptide_precision) << " | " << signed3(c.delta_peptide_coverage) << " | "
      << signed3(c.delta_aa_precision) << " | " << signed3(c.delta_aa_recall) << " |\n";
  if (c.a.precision_undefined || c.b.precision_undefined)
    out << "note: precision undefined (no predicted spectra) for "
        << (c.a.precision_undefined ? c.label_a : c.label_b) << ", reported as 0\n";
  if (c.test) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "wilcoxon signed-rank on per-spectrum AA recall: n=%zu W=%.1f W+-W-=%.1f p=%.6g (%s)\n",
                  c.test->n, c.test->statistic, c.test->signed_statistic(), c.test->p_value,
                  c.test->exact ? "exact" : "normal approximation");
    out << buf;
  } else {
    out << "wilcoxon signed-rank on per-spectrum AA recall: undefined (" << c.undefined_reason << ")\n";
  }
  return out.str();
}

SplitFiles write_synthetic_splits(const RunConfig& cfg, const std::string& out_dir) {
  cfg.synth.validate();
  if (cfg.synth_count < 1) throw ConfigError("synth.count must be >= 1");
  fs::create_directories(out_dir);
  const Vocabulary vocab = cfg.vocab();
  SynthConfig sc = cfg.synth;
  sc.vocab = vocab;
  const auto corpus = generate_corpus(sc, cfg.synth_count);
  std::vector<Spectrum> parts[3];
  for (const auto& s : corpus) parts[static_cast<int>(split_of(s.title))].push_back(s);
  SplitFiles files;
  files.train = (fs::path(out_dir) / "train.mgf").string();
  files.validation = (fs::path(out_dir) / "val.mgf").string();
  files.test = (fs::path(out_dir) / "test.mgf").string();
  write_mgf_file(files.train, parts[0], vocab);
  write_mgf_file(files.validation, parts[1], vocab);
  write_mgf_file(files.test, parts[2], vocab);
  files.train_count = static_cast<int>(parts[0].size());
  files.validation_count = static_cast<int>(parts[1].size());
  files.test_count = static_cast<int>(parts[2].size());
  nlohmann::json manifest = {{"seed", sc.seed},
                             {"vocabulary", cfg.vocabulary},
                             {"count", cfg.synth_count},
                             {"train", {{"file", "train.mgf"}, {"spectra", files.train_count}}},
                             {"val", {{"file", "val.mgf"}, {"spectra", files.validation_count}}},
                             {"test", {{"file", "test.mgf"}, {"spectra", files.test_count}}}};
  std::ofstream m(fs::path(out_dir) / "manifest.json");
  if (!m) throw IoError("cannot write manifest in '" + out_dir + "'");
  m << manifest.dump(2) << '\n';
  return files;
}

namespace {

struct GridContext {
  const RunConfig& base;
  fs::path dir;
  int jobs;
  std::ostream* log;
  std::vector<Spectrum> train;
  std::vector<Spectrum> val;
  std::vector<Spectrum> test;
  std::optional<KnapsackTable> table;
};

double mean_seconds(const std::vector<Prediction>& preds) {
  if (preds.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : preds) total += p.seconds;
  return total / static_cast<double>(preds.size());
}

ModelBundle train_model(GridContext& ctx, DecoderVariant variant, LossKind loss) {
  RunConfig cfg = ctx.base;
  cfg.variant = variant;
  cfg.train.loss.kind = loss;
  const std::string tag = to_string(variant) + "_" + to_string(loss);
  cfg.train.checkpoint_path = (ctx.dir / (tag + ".ckpt")).string();
  cfg.search.decoder.clear();
  if (ctx.log) *ctx.log << "train " << tag << std::endl;
  ModelBundle model(cfg.vocab(), cfg.model, variant, cfg.seed);
  const auto history = train(model, ctx.train, ctx.val, cfg.train, cfg.preprocess, cfg.predict_options(),
                             [&](const EpochRecord& r) {
                               if (ctx.log)
                                 *ctx.log << "  epoch " << r.epoch << " loss " << r.train_loss
                                          << (r.val_aa_precision ? " val_aa_precision " + f3(*r.val_aa_precision)
                                                                 : std::string())
                                          << std::endl;
                             });
  write_history_file((ctx.dir / (tag + ".history.jsonl")).string(), history);
  return model;
}

GridRow decode(GridContext& ctx, const ModelBundle& model, DecoderKind decoder, LossKind loss) {
  PredictOptions opt = ctx.base.predict_options();
  opt.decoder = decoder;
  opt.jobs = ctx.jobs;
  if (decoder == DecoderKind::kKnapsackBeam && !ctx.table)
    ctx.table = KnapsackTable::build(model.vocab(), ctx.base.search.knapsack_resolution,
                                     ctx.base.search.knapsack_max_mass);
  const auto preds = predict(model, ctx.test, opt, ctx.table ? &*ctx.table : nullptr);
  const std::string tag = to_string(model.variant()) + "_" + to_string(loss) + "_" + to_string(decoder);
  write_predictions_file((ctx.dir / (tag + ".predictions.tsv")).string(), model.vocab(), preds);
  GridRow row;
  row.model = to_string(model.variant());
  row.decoder = to_string(decoder);
  row.loss = to_string(loss);
  row.report = evaluate(model.vocab(), to_entries(preds, ctx.test), ctx.base.metrics);
  row.mean_seconds = mean_seconds(preds);
  write_report_file((ctx.dir / (tag + ".report.tsv")).string(), model.vocab(), row.report);
  if (ctx.log) *ctx.log << "decode " << tag << " aa_precision " << f3(row.report.aa_precision) << std::endl;
  return row;
}

std::vector<Spectrum> load_split(const std::string& path, const RunConfig& cfg) {
  auto spectra = read_mgf_file(path, cfg.vocab());
  for (auto& s : spectra) s = preprocess(s, cfg.preprocess);
  return spectra;
}

}  // namespace

GridResult run_grid(const RunConfig& base, const std::string& out_dir, int jobs, std::ostream* log) {
  base.validate();
  GridContext ctx{base, fs::path(out_dir), jobs, log, {}, {}, {}, std::nullopt};
  const SplitFiles files = write_synthetic_splits(base, (ctx.dir / "data").string());
  ctx.train = load_split(files.train, base);
  ctx.val = load_split(files.validation, base);
  ctx.test = load_split(files.test, base);
  if (ctx.train.empty() || ctx.test.empty()) throw ConfigError("grid: synth.count too small for a test split");

  GridResult g;
  std::map<std::string, GridRow> diffusion_rows;
  std::optional<GridRow> ar_row;
  for (DecoderVariant v : {DecoderVariant::kAR, DecoderVariant::kDS, DecoderVariant::kDM1, DecoderVariant::kDM2}) {
    const ModelBundle model = train_model(ctx, v, LossKind::kCrossEntropy);
    GridRow row = decode(ctx, model, default_decoder(v), LossKind::kCrossEntropy);
    g.decoders.push_back(row);
    if (v == DecoderVariant::kAR) {
      ar_row = row;
      g.beam_seconds = row.mean_seconds;
    }
    if (v == DecoderVariant::kAR || v == DecoderVariant::kDS) {
      GridRow k = decode(ctx, model, DecoderKind::kKnapsackBeam, LossKind::kCrossEntropy);
      if (v == DecoderVariant::kAR) g.knapsack_seconds = k.mean_seconds;
      g.knapsack.push_back(k);
    }
    if (v == DecoderVariant::kDM1 || v == DecoderVariant::kDM2) g.losses.push_back(row);
    if (is_diffusion(v)) diffusion_rows[row.model + " " + row.loss] = row;
  }
  for (DecoderVariant v : {DecoderVariant::kDM1, DecoderVariant::kDM2}) {
    for (LossKind loss : {LossKind::kWeightedEntropy, LossKind::kDinoiser}) {
      const ModelBundle model = train_model(ctx, v, loss);
      GridRow row = decode(ctx, model, DecoderKind::kDiffusion, loss);
      g.losses.push_back(row);
      diffusion_rows[row.model + " " + row.loss] = row;
    }
  }
  const GridRow* best = nullptr;
  for (const auto& [label, row] : diffusion_rows)
    if (!best || row.report.aa_recall > best->report.aa_recall) best = &row;
  g.best_diffusion = best->model + " (" + best->loss + ")";
  g.best_vs_ar = compare_reports(ar_row->report, best->report, "AR (beam)", g.best_diffusion);

  std::ofstream tables(ctx.dir / "tables.md");
  tables << format_grid(g);
  return g;
}

std::string format_grid(const GridResult& g) {
  std::ostringstream out;
  const char* header =
      "| Model | Decoder | Loss | Peptide precision | Peptide coverage | AA precision | AA recall | s/spectrum |\n"
      "|---|---|---|---|---|---|---|---|\n";
  auto rows = [&](const std::vector<GridRow>& rs) {
    out << header;
    for (const auto& r : rs) {
      char secs[32];
      std::snprintf(secs, sizeof(secs), "%.5f", r.mean_seconds);
      out << "| " << r.model << " | " << r.decoder << " | " << r.loss << " | " << metrics_cells(r.report) << " | "
          << secs << " |\n";
    }
    out << '\n';
  };
  out << "## Table 1: decoder replacement\n\n";
  rows(g.decoders);
  out << "## Table 2: knapsack beam search\n\n";
  rows(g.knapsack);
  char ratio[96];
  std::snprintf(ratio, sizeof(ratio), "knapsack overhead (AR): %.5f s vs %.5f s per spectrum, ratio %.2f\n\n",
                g.knapsack_seconds, g.beam_seconds, g.knapsack_overhead());
  out << ratio;
  out << "## Table 3: loss functions\n\n";
  rows(g.losses);
  out << "## Best diffusion vs AR\n\n" << format_comparison(g.best_vs_ar);
  return out.str();
}

}  // namespace denovo
