#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mamp/config.hpp"
#include "mamp/corpus.hpp"
#include "mamp/model.hpp"

namespace mamp {

struct DataConfig {
  std::string corpus;  // manifest file, or directory containing manifest.csv
  SplitRule split{SplitRule::Kind::kBySubject, {0, 1, 2, 3, 4}, 0.8, 0};
};

// Resolves a --corpus value (directory or manifest path) to a manifest path.
std::string resolve_manifest(const std::string& corpus_arg);

// Desk-scale architecture: the full-scale hyperparameters shrunk to run in
// minutes on one CPU core (full-scale values remain reachable via config).
ArchConfig desk_arch();

struct PretrainConfig {
  ArchConfig arch = desk_arch();
  DataConfig data;
  std::size_t epochs = 100;        // full scale: 400
  std::size_t batch_size = 32;     // full scale: 128
  std::size_t warmup_epochs = 20;
  double peak_lr = 1e-3;
  double floor_lr = 5e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  MaskStrategy masking = MaskStrategy::kMotionAware;
  double temperature = 1.0;
  std::uint64_t seed = 7;
  std::size_t checkpoint_every = 0;  // epochs between checkpoints; 0 = final only

  void validate() const;
};

struct EvalConfig {
  enum class Mode { kLinear, kFinetune };
  Mode mode = Mode::kLinear;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double peak_lr = 0.1;
  double floor_lr = 0.0;
  std::size_t warmup_epochs = 0;
  double momentum = 0.9;      // linear probe SGD
  double layer_decay = 0.65;  // finetune layer-wise lr decay
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double label_fraction = 1.0;
  std::string pooling = "mean";
  std::uint64_t seed = 7;

  static EvalConfig linear_defaults();
  static EvalConfig finetune_defaults();
  void validate() const;
};

// Config-file loaders (sections: data/pretrain/arch, or data/eval). Unknown
// keys are hard errors.
PretrainConfig load_pretrain_config(const std::string& path);
EvalConfig load_eval_config(const std::string& path, EvalConfig defaults);

// Canonical "key: value" rendering of the full pretrain configuration; the
// config hash is FNV-1a over this text (seed excluded — it is reported
// separately).
std::string canonical_text(const PretrainConfig& cfg);
std::uint64_t config_hash(const PretrainConfig& cfg);

struct MetricRow {
  std::size_t epoch;
  std::string split;
  std::string metric;
  double value;
};

struct RunRecord {
  std::vector<MetricRow> rows;
  double wall_seconds = 0.0;
  std::uint64_t config_hash = 0;
  std::string provenance;
};

// Header "epoch,split,metric,value"; values rendered with %.17g.
void write_metrics_csv(const std::string& path, const RunRecord& record);

struct PretrainResult {
  ModelParams params;
  RunRecord record;
  double final_loss = 0.0;
  std::uint64_t schedule_step = 0;
};

// Runs the masked-prediction MSE objective with AdamW and the
// warmup+cosine schedule.
// When out_dir is non-empty, writes checkpoint_final.ckpt, metrics.csv, and
// run_info.txt there (plus interval checkpoints). NaN loss aborts with a
// diagnostic dump and NumericalError.
PretrainResult pretrain(const PretrainConfig& cfg, const Corpus& corpus,
                        const std::string& out_dir);

// Deterministic test-view features, one row per entry: [N, C_e].
DenseArray corpus_features(ModelParams& params, const std::vector<CorpusEntry>& entries);

struct EvalResult {
  double test_accuracy = 0.0;
  RunRecord record;
};

// The probe classifier on fixed feature rows ([N, D] + labels): softmax
// cross-entropy, SGD+momentum, cosine lr. linear_probe delegates here after
// extracting frozen backbone features.
EvalResult probe_on_features(const DenseArray& x_train, const std::vector<int>& y_train,
                             const DenseArray& x_test, const std::vector<int>& y_test,
                             const EvalConfig& cfg);

// Layer-wise lr multipliers for fine-tuning, keyed by parameter name: the
// head (not listed) gets decay^0, the final encoder LN and top block
// decay^1, block i decay^(L_e-i), and the embedding plus encoder positional
// embeddings decay^(L_e+1). Decoder parameters are not fine-tuned.
std::vector<std::pair<std::string, double>> finetune_lr_multipliers(const ArchConfig& arch,
                                                                    double decay);

// Linear protocol: softmax classifier on frozen mean-pooled features,
// SGD+momentum, cosine lr. Never mutates the backbone.
EvalResult linear_probe(ModelParams& params, const Corpus& corpus, const EvalConfig& cfg);

// Fine-tune protocol: MLP head (hidden C_e, GELU), AdamW with per-layer
// lr multipliers decay^(depth_from_top), warmup+cosine schedule. Supports
// stratified label-fraction subsets; the corpus may differ from the
// pre-training corpus (transfer).
EvalResult finetune(ModelParams& params, const Corpus& corpus, const EvalConfig& cfg);

struct AblationRow {
  std::string axis;
  std::string setting;
  std::uint64_t seed;
  std::uint64_t config_hash;
  double probe_accuracy;
  double pretrain_final_loss;
};

// Axes: streams | masking | segment | decoder-depth | decoder-width |
// mask-ratio | schedule. Runs pretrain+probe per setting and seed.
std::vector<AblationRow> run_ablation_suite(const PretrainConfig& base, const Corpus& corpus,
                                            const std::string& axis, std::size_t num_seeds);

// Header "axis,setting,seed,config_hash,probe_accuracy,pretrain_final_loss".
void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

}  // namespace mamp
