// mamp — masked-motion pre-training pipeline for 3D skeleton sequences.
//
// Subcommands: gen-data, pretrain, probe, finetune, ablate, report.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mamp/checkpoint.hpp"
#include "mamp/corpus.hpp"
#include "mamp/error.hpp"
#include "mamp/report.hpp"
#include "mamp/synth.hpp"
#include "mamp/train.hpp"

namespace {

mamp::Corpus load_for(const mamp::DataConfig& data) {
  return mamp::load_corpus(mamp::resolve_manifest(data.corpus), data.split);
}

void print_eval(const mamp::EvalResult& result, const char* protocol) {
  std::printf("%s test accuracy: %.4f\n", protocol, result.test_accuracy);
  std::printf("wall seconds: %.2f\n", result.record.wall_seconds);
}

void maybe_write_metrics(const std::string& out_dir, const char* name,
                         const mamp::RunRecord& record) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  const auto path = (std::filesystem::path(out_dir) / name).string();
  mamp::write_metrics_csv(path, record);
  std::printf("wrote %s\n", path.c_str());
}

int run(int argc, char** argv) {
  CLI::App app{"masked motion pre-training for skeleton action sequences"};
  app.require_subcommand(1);

  // --- gen-data ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic skeleton corpus");
  mamp::SyntheticCorpusConfig synth_cfg;
  std::string gen_out;
  gen->add_option("--classes", synth_cfg.num_classes, "number of action classes");
  gen->add_option("--per-class", synth_cfg.sequences_per_class, "sequences per class");
  gen->add_option("--joints", synth_cfg.joints, "joints per skeleton");
  gen->add_option("--channels", synth_cfg.channels, "coordinates per joint");
  gen->add_option("--min-frames", synth_cfg.min_frames, "minimum sequence length");
  gen->add_option("--max-frames", synth_cfg.max_frames, "maximum sequence length");
  gen->add_option("--noise", synth_cfg.noise_sigma, "coordinate noise sigma");
  gen->add_option("--seed", synth_cfg.seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // --- pretrain ------------------------------------------------------------
  auto* pre = app.add_subcommand("pretrain", "self-supervised masked motion pre-training");
  std::string pre_config, pre_out;
  std::uint64_t pre_seed = 0;
  bool pre_seed_set = false;
  pre->add_option("--config", pre_config, "config file")->required();
  pre->add_option("--seed", pre_seed, "override config seed")
      ->each([&](const std::string&) { pre_seed_set = true; });
  pre->add_option("--out", pre_out, "output directory")->required();

  // --- probe ---------------------------------------------------------------
  auto* probe = app.add_subcommand("probe", "linear probe of a frozen checkpoint");
  std::string probe_ckpt, probe_corpus, probe_config, probe_out;
  probe->add_option("--ckpt", probe_ckpt, "checkpoint file")->required();
  probe->add_option("--corpus", probe_corpus, "corpus manifest or directory")->required();
  probe->add_option("--config", probe_config, "eval config file");
  probe->add_option("--out", probe_out, "directory for metrics CSV");

  // --- finetune ------------------------------------------------------------
  auto* ft = app.add_subcommand("finetune", "end-to-end fine-tuning of a checkpoint");
  std::string ft_ckpt, ft_corpus, ft_config, ft_out;
  double ft_fraction = -1.0;
  ft->add_option("--ckpt", ft_ckpt, "checkpoint file")->required();
  ft->add_option("--corpus", ft_corpus, "corpus manifest or directory")->required();
  ft->add_option("--label-fraction", ft_fraction, "stratified label fraction in (0,1]");
  ft->add_option("--config", ft_config, "eval config file");
  ft->add_option("--out", ft_out, "directory for metrics CSV");

  // --- ablate --------------------------------------------------------------
  auto* abl = app.add_subcommand("ablate", "pretrain+probe sweep along one axis");
  std::string abl_axis, abl_corpus, abl_config, abl_out;
  std::size_t abl_seeds = 3;
  abl->add_option("--axis", abl_axis,
                  "streams|masking|segment|decoder-depth|decoder-width|mask-ratio|schedule")
      ->required();
  abl->add_option("--corpus", abl_corpus, "corpus manifest or directory")->required();
  abl->add_option("--config", abl_config, "pretrain config file (defaults otherwise)");
  abl->add_option("--seeds", abl_seeds, "seeds per setting");
  abl->add_option("--out", abl_out, "output CSV path")->required();

  // --- report --------------------------------------------------------------
  auto* rep = app.add_subcommand("report", "render CSV results as text table + SVG plot");
  mamp::ReportSpec report_spec;
  rep->add_option("--kind", report_spec.kind, "loss-curve|ratio-sweep|schedule-sweep|table")
      ->required();
  rep->add_option("--in", report_spec.inputs, "input CSV files")->required();
  rep->add_option("--out", report_spec.out_path, "output base path (writes .txt and .svg)")
      ->required();
  rep->add_option("--x-label", report_spec.x_label, "x axis label");
  rep->add_option("--y-label", report_spec.y_label, "y axis label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mamp::kExitConfigError;
  }

  if (gen->parsed()) {
    synth_cfg.validate();
    const auto manifest = mamp::generate_synthetic_corpus(synth_cfg, gen_out);
    std::printf("wrote %s (%zu classes x %zu sequences)\n", manifest.c_str(),
                synth_cfg.num_classes, synth_cfg.sequences_per_class);
    return 0;
  }

  if (pre->parsed()) {
    mamp::PretrainConfig cfg = mamp::load_pretrain_config(pre_config);
    if (pre_seed_set) cfg.seed = pre_seed;
    cfg.validate();
    const auto corpus = load_for(cfg.data);
    const auto result = mamp::pretrain(cfg, corpus, pre_out);
    std::printf("final pretrain loss: %.6f\n", result.final_loss);
    std::printf("wall seconds: %.2f\n", result.record.wall_seconds);
    return 0;
  }

  if (probe->parsed()) {
    mamp::EvalConfig cfg = mamp::EvalConfig::linear_defaults();
    if (!probe_config.empty()) cfg = mamp::load_eval_config(probe_config, cfg);
    cfg.mode = mamp::EvalConfig::Mode::kLinear;
    cfg.validate();
    auto ckpt = mamp::load_checkpoint(probe_ckpt);
    mamp::DataConfig data;
    data.corpus = probe_corpus;
    const auto corpus = load_for(data);
    const auto result = mamp::linear_probe(ckpt.params, corpus, cfg);
    print_eval(result, "linear probe");
    maybe_write_metrics(probe_out, "probe_metrics.csv", result.record);
    return 0;
  }

  if (ft->parsed()) {
    mamp::EvalConfig cfg = mamp::EvalConfig::finetune_defaults();
    if (!ft_config.empty()) cfg = mamp::load_eval_config(ft_config, cfg);
    cfg.mode = mamp::EvalConfig::Mode::kFinetune;
    if (ft_fraction > 0.0) cfg.label_fraction = ft_fraction;
    cfg.validate();
    auto ckpt = mamp::load_checkpoint(ft_ckpt);
    mamp::DataConfig data;
    data.corpus = ft_corpus;
    const auto corpus = load_for(data);
    const auto result = mamp::finetune(ckpt.params, corpus, cfg);
    print_eval(result, "finetune");
    maybe_write_metrics(ft_out, "finetune_metrics.csv", result.record);
    return 0;
  }

  if (abl->parsed()) {
    mamp::PretrainConfig base;
    if (!abl_config.empty()) base = mamp::load_pretrain_config(abl_config);
    base.data.corpus = abl_corpus;
    base.validate();
    const auto corpus = load_for(base.data);
    const auto rows = mamp::run_ablation_suite(base, corpus, abl_axis, abl_seeds);
    mamp::write_ablation_csv(abl_out, rows);
    std::printf("wrote %s (%zu rows)\n", abl_out.c_str(), rows.size());
    return 0;
  }

  if (rep->parsed()) {
    mamp::render_report(report_spec);
    std::printf("wrote report for %zu input file(s)\n", report_spec.inputs.size());
    return 0;
  }

  return mamp::kExitConfigError;  // unreachable: a subcommand is required
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mamp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return mamp::kExitConfigError;
  } catch (const mamp::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return mamp::kExitDataError;
  } catch (const mamp::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return mamp::kExitNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return mamp::kExitNumericalError;
  }
}
