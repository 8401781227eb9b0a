#include "mamp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mamp/checkpoint.hpp"
#include "mamp/error.hpp"
#include "mamp/optim.hpp"
#include "mamp/skeleton.hpp"

namespace mamp {

namespace {

// Seed-mixing purpose tags.
constexpr std::uint64_t kTagShuffle = 0x5417;
constexpr std::uint64_t kTagView = 0x71e3;
constexpr std::uint64_t kTagMask = 0x3a5c;
constexpr std::uint64_t kTagSubset = 0x5b5e;
constexpr std::uint64_t kTagEvalShuffle = 0xe7a1;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  return order;
}

void check_entries_match_arch(const std::vector<CorpusEntry>& entries, const ArchConfig& arch,
                              const char* split_name) {
  for (const auto& e : entries) {
    if (e.seq.num_joints() != arch.joints || e.seq.num_channels() != arch.channels) {
      throw DataError(std::string(split_name) + " sequence " + e.path + " has [V,C] = [" +
                      std::to_string(e.seq.num_joints()) + "," +
                      std::to_string(e.seq.num_channels()) + "], architecture expects [" +
                      std::to_string(arch.joints) + "," + std::to_string(arch.channels) + "]");
    }
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

int count_classes(const Corpus& corpus) {
  const auto k = corpus.num_classes();
  if (k < 2) throw DataError("corpus has fewer than 2 classes");
  return static_cast<int>(k);
}

std::string split_rule_text(const SplitRule& rule) {
  std::ostringstream out;
  switch (rule.kind) {
    case SplitRule::Kind::kBySubject:
    case SplitRule::Kind::kByView: {
      out << (rule.kind == SplitRule::Kind::kBySubject ? "subject" : "view") << " train_ids=";
      for (std::size_t i = 0; i < rule.train_ids.size(); ++i) {
        if (i) out << ',';
        out << rule.train_ids[i];
      }
      break;
    }
    case SplitRule::Kind::kByFraction:
      out << "fraction " << fmt17(rule.train_fraction) << " seed=" << rule.fraction_seed;
      break;
  }
  return out.str();
}

}  // namespace

std::string resolve_manifest(const std::string& corpus_arg) {
  namespace fs = std::filesystem;
  if (fs::is_directory(corpus_arg)) {
    return (fs::path(corpus_arg) / "manifest.csv").string();
  }
  return corpus_arg;
}

ArchConfig desk_arch() {
  ArchConfig a;
  a.joints = 15;
  a.channels = 3;
  a.segment_len = 4;
  a.seq_len = 24;
  a.embed_dim = 48;
  a.encoder_depth = 2;
  a.decoder_depth = 1;
  a.decoder_dim = 48;
  a.heads = 4;
  a.mlp_hidden = 192;
  return a;
}

void PretrainConfig::validate() const {
  arch.validate();
  if (epochs < 1 || batch_size < 1) throw ConfigError("pretrain: epochs and batch_size >= 1");
  if (warmup_epochs >= epochs) throw ConfigError("pretrain: warmup_epochs must be < epochs");
  if (peak_lr < floor_lr || floor_lr < 0.0) throw ConfigError("pretrain: bad lr range");
  if (!(temperature > 0.0)) throw ConfigError("pretrain: temperature must be > 0");
  if (weight_decay < 0.0) throw ConfigError("pretrain: negative weight decay");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("pretrain: betas must lie in [0,1)");
  }
}

EvalConfig EvalConfig::linear_defaults() { return EvalConfig{}; }

EvalConfig EvalConfig::finetune_defaults() {
  EvalConfig cfg;
  cfg.mode = Mode::kFinetune;
  cfg.epochs = 100;
  cfg.batch_size = 48;
  cfg.peak_lr = 3e-4;
  cfg.floor_lr = 1e-5;
  cfg.warmup_epochs = 5;
  return cfg;
}

void EvalConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw ConfigError("eval: epochs and batch_size >= 1");
  if (warmup_epochs >= epochs) throw ConfigError("eval: warmup_epochs must be < epochs");
  if (peak_lr < floor_lr || floor_lr < 0.0) throw ConfigError("eval: bad lr range");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) {
    throw ConfigError("eval: label_fraction must be in (0,1]");
  }
  if (!(layer_decay > 0.0 && layer_decay <= 1.0)) {
    throw ConfigError("eval: layer_decay must be in (0,1]");
  }
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("eval: momentum must be in [0,1)");
  if (pooling != "mean") {
    throw ConfigError("eval: 'mean' is the only supported pooling rule, got '" + pooling + "'");
  }
}

namespace {

DataConfig data_from_reader(ConfigReader& reader) {
  DataConfig data;
  data.corpus = reader.get_string("data.corpus", "");
  const std::string split = reader.get_string("data.split", "subject");
  if (split == "subject") {
    data.split.kind = SplitRule::Kind::kBySubject;
  } else if (split == "view") {
    data.split.kind = SplitRule::Kind::kByView;
  } else if (split == "fraction") {
    data.split.kind = SplitRule::Kind::kByFraction;
  } else {
    throw ConfigError("data.split must be subject|view|fraction, got '" + split + "'");
  }
  data.split.train_ids = reader.get_int_list("data.train_ids", data.split.train_ids);
  data.split.train_fraction = reader.get_double("data.train_fraction", data.split.train_fraction);
  data.split.fraction_seed = reader.get_u64("data.fraction_seed", data.split.fraction_seed);
  return data;
}

ArchConfig arch_from_reader(ConfigReader& reader, ArchConfig arch) {
  arch.joints = reader.get_size("arch.joints", arch.joints);
  arch.channels = reader.get_size("arch.channels", arch.channels);
  arch.segment_len = reader.get_size("arch.segment_len", arch.segment_len);
  arch.seq_len = reader.get_size("arch.seq_len", arch.seq_len);
  arch.embed_dim = reader.get_size("arch.embed_dim", arch.embed_dim);
  arch.encoder_depth = reader.get_size("arch.encoder_depth", arch.encoder_depth);
  arch.decoder_depth = reader.get_size("arch.decoder_depth", arch.decoder_depth);
  arch.decoder_dim = reader.get_size("arch.decoder_dim", arch.decoder_dim);
  arch.heads = reader.get_size("arch.heads", arch.heads);
  arch.mlp_hidden = reader.get_size("arch.mlp_hidden", arch.mlp_hidden);
  arch.mask_ratio = reader.get_double("arch.mask_ratio", arch.mask_ratio);
  arch.target_stride = reader.get_size("arch.target_stride", arch.target_stride);
  arch.target_padding =
      padding_from_string(reader.get_string("arch.target_padding", to_string(arch.target_padding)));
  arch.input_stream =
      stream_from_string(reader.get_string("arch.input_stream", to_string(arch.input_stream)));
  arch.target_stream =
      stream_from_string(reader.get_string("arch.target_stream", to_string(arch.target_stream)));
  arch.dropout = reader.get_double("arch.dropout", arch.dropout);
  return arch;
}

}  // namespace

PretrainConfig load_pretrain_config(const std::string& path) {
  ConfigReader reader(parse_config_file(path), path);
  PretrainConfig cfg;
  cfg.data = data_from_reader(reader);
  cfg.arch = arch_from_reader(reader, cfg.arch);
  cfg.epochs = reader.get_size("pretrain.epochs", cfg.epochs);
  cfg.batch_size = reader.get_size("pretrain.batch_size", cfg.batch_size);
  cfg.warmup_epochs = reader.get_size("pretrain.warmup_epochs", cfg.warmup_epochs);
  cfg.peak_lr = reader.get_double("pretrain.peak_lr", cfg.peak_lr);
  cfg.floor_lr = reader.get_double("pretrain.floor_lr", cfg.floor_lr);
  cfg.weight_decay = reader.get_double("pretrain.weight_decay", cfg.weight_decay);
  cfg.beta1 = reader.get_double("pretrain.beta1", cfg.beta1);
  cfg.beta2 = reader.get_double("pretrain.beta2", cfg.beta2);
  cfg.masking =
      mask_strategy_from_string(reader.get_string("pretrain.masking", to_string(cfg.masking)));
  cfg.temperature = reader.get_double("pretrain.temperature", cfg.temperature);
  cfg.seed = reader.get_u64("pretrain.seed", cfg.seed);
  cfg.checkpoint_every = reader.get_size("pretrain.checkpoint_every", cfg.checkpoint_every);
  reader.finish();
  cfg.validate();
  return cfg;
}

EvalConfig load_eval_config(const std::string& path, EvalConfig cfg) {
  ConfigReader reader(parse_config_file(path), path);
  cfg.epochs = reader.get_size("eval.epochs", cfg.epochs);
  cfg.batch_size = reader.get_size("eval.batch_size", cfg.batch_size);
  cfg.peak_lr = reader.get_double("eval.peak_lr", cfg.peak_lr);
  cfg.floor_lr = reader.get_double("eval.floor_lr", cfg.floor_lr);
  cfg.warmup_epochs = reader.get_size("eval.warmup_epochs", cfg.warmup_epochs);
  cfg.momentum = reader.get_double("eval.momentum", cfg.momentum);
  cfg.layer_decay = reader.get_double("eval.layer_decay", cfg.layer_decay);
  cfg.weight_decay = reader.get_double("eval.weight_decay", cfg.weight_decay);
  cfg.beta1 = reader.get_double("eval.beta1", cfg.beta1);
  cfg.beta2 = reader.get_double("eval.beta2", cfg.beta2);
  cfg.label_fraction = reader.get_double("eval.label_fraction", cfg.label_fraction);
  cfg.pooling = reader.get_string("eval.pooling", cfg.pooling);
  cfg.seed = reader.get_u64("eval.seed", cfg.seed);
  reader.finish();
  cfg.validate();
  return cfg;
}

std::string canonical_text(const PretrainConfig& cfg) {
  std::ostringstream out;
  const ArchConfig& a = cfg.arch;
  out << "arch:\n"
      << "  joints: " << a.joints << "\n  channels: " << a.channels
      << "\n  segment_len: " << a.segment_len << "\n  seq_len: " << a.seq_len
      << "\n  embed_dim: " << a.embed_dim << "\n  encoder_depth: " << a.encoder_depth
      << "\n  decoder_depth: " << a.decoder_depth << "\n  decoder_dim: " << a.decoder_dim
      << "\n  heads: " << a.heads << "\n  mlp_hidden: " << a.mlp_hidden
      << "\n  mask_ratio: " << fmt17(a.mask_ratio) << "\n  target_stride: " << a.target_stride
      << "\n  target_padding: " << to_string(a.target_padding)
      << "\n  input_stream: " << to_string(a.input_stream)
      << "\n  target_stream: " << to_string(a.target_stream)
      << "\n  dropout: " << fmt17(a.dropout) << "\n";
  out << "data:\n  corpus: " << cfg.data.corpus
      << "\n  split: " << split_rule_text(cfg.data.split) << "\n";
  out << "pretrain:\n  epochs: " << cfg.epochs << "\n  batch_size: " << cfg.batch_size
      << "\n  warmup_epochs: " << cfg.warmup_epochs << "\n  peak_lr: " << fmt17(cfg.peak_lr)
      << "\n  floor_lr: " << fmt17(cfg.floor_lr)
      << "\n  weight_decay: " << fmt17(cfg.weight_decay) << "\n  beta1: " << fmt17(cfg.beta1)
      << "\n  beta2: " << fmt17(cfg.beta2) << "\n  masking: " << to_string(cfg.masking)
      << "\n  temperature: " << fmt17(cfg.temperature)
      << "\n  checkpoint_every: " << cfg.checkpoint_every << "\n";
  return out.str();
}

std::uint64_t config_hash(const PretrainConfig& cfg) { return fnv1a(canonical_text(cfg)); }

void write_metrics_csv(const std::string& path, const RunRecord& record) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "epoch,split,metric,value\n";
  for (const auto& row : record.rows) {
    out << row.epoch << ',' << row.split << ',' << row.metric << ',' << fmt17(row.value)
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

PretrainResult pretrain(const PretrainConfig& cfg, const Corpus& corpus,
                        const std::string& out_dir) {
  cfg.validate();
  if (corpus.train.empty()) throw DataError("pretrain: empty training split");
  check_entries_match_arch(corpus.train, cfg.arch, "train");
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t n = corpus.train.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  ScheduleConfig sched{cfg.warmup_epochs, cfg.epochs, steps_per_epoch, cfg.peak_lr,
                       cfg.floor_lr};
  sched.validate();

  ModelParams params = init_params(cfg.arch, cfg.seed);
  AdamW opt(AdamWConfig{cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay});
  for (Parameter* p : params.all()) opt.attach(*p);

  RunRecord record;
  record.config_hash = config_hash(cfg);
  record.provenance = "mamp-pretrain config=" + fmt_hex(record.config_hash) +
                      " seed=" + std::to_string(cfg.seed);

  if (!out_dir.empty()) ensure_dir(out_dir);

  PretrainForwardOptions fwd;
  fwd.strategy = cfg.masking;
  fwd.temperature = cfg.temperature;

  Tape tape;
  std::vector<Tensor> losses;
  std::uint64_t step = 0;
  double final_epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(n, mix_seed({cfg.seed, kTagShuffle, epoch}));
    double epoch_loss_sum = 0.0;
    double last_lr = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      tape.clear();
      losses.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        const CorpusEntry& entry = corpus.train[idx];
        RandomStream view_rng(mix_seed({cfg.seed, kTagView, epoch, idx}));
        const DenseArray view = training_view(entry.seq, cfg.arch.seq_len, view_rng);
        RandomStream mask_rng(mix_seed({cfg.seed, kTagMask, epoch, idx}));
        ForwardArtifacts art = forward_pretrain(tape, view, params, fwd, &mask_rng);
        losses.push_back(art.loss_node);
        epoch_loss_sum += art.loss;
      }
      Tensor batch_loss = tape.mean_of(losses);
      if (!std::isfinite(batch_loss->value()[0])) {
        std::ostringstream dump;
        dump << "non-finite pre-training loss\n"
             << "  epoch " << epoch + 1 << ", step " << step + 1 << "\n  batch sample indices:";
        for (std::size_t i = start; i < stop; ++i) dump << ' ' << order[i];
        dump << "\n  per-sample losses:";
        for (const Tensor l : losses) dump << ' ' << fmt17(l->value()[0]);
        dump << "\n  config " << fmt_hex(record.config_hash) << " seed " << cfg.seed << "\n";
        std::cerr << dump.str();
        if (!out_dir.empty()) {
          std::ofstream f(out_dir + "/nan_dump.txt");
          f << dump.str();
        }
        throw NumericalError("pre-training diverged: non-finite loss at step " +
                             std::to_string(step + 1));
      }
      tape.backward(batch_loss);
      ++step;
      last_lr = lr_at(step, sched);
      opt.step(last_lr);
      opt.zero_grads();
    }
    const double epoch_loss = epoch_loss_sum / static_cast<double>(n);
    final_epoch_loss = epoch_loss;
    record.rows.push_back({epoch + 1, "train", "loss", epoch_loss});
    record.rows.push_back({epoch + 1, "train", "lr", last_lr});
    if (!out_dir.empty() && cfg.checkpoint_every > 0 &&
        (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs) {
      char name[64];
      std::snprintf(name, sizeof name, "/checkpoint_epoch_%04zu.ckpt", epoch + 1);
      save_checkpoint(out_dir + name, params, cfg.seed, step, &opt);
    }
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  if (!out_dir.empty()) {
    save_checkpoint(out_dir + "/checkpoint_final.ckpt", params, cfg.seed, step, &opt);
    write_metrics_csv(out_dir + "/metrics.csv", record);
    std::ofstream info(out_dir + "/run_info.txt");
    info << record.provenance << "\nwall_seconds: " << record.wall_seconds << "\n"
         << canonical_text(cfg);
  }

  PretrainResult result{std::move(params), std::move(record), final_epoch_loss, step};
  return result;
}

DenseArray corpus_features(ModelParams& params, const std::vector<CorpusEntry>& entries) {
  DenseArray features({entries.size(), params.cfg.embed_dim});
  Tape tape;
  tape.set_recording(false);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    tape.clear();
    const DenseArray view = test_view(entries[i].seq, params.cfg.seq_len);
    Tensor f = encode_features(tape, view, params);
    const auto& v = f->value().values();
    std::copy(v.begin(), v.end(), features.data() + i * params.cfg.embed_dim);
  }
  return features;
}

namespace {

std::vector<int> entry_labels(const std::vector<CorpusEntry>& entries) {
  std::vector<int> labels(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) labels[i] = entries[i].seq.label;
  return labels;
}

double top1_accuracy(const DenseArray& logits, const std::vector<int>& labels) {
  const std::size_t n = logits.extent(0), k = logits.extent(1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (logits.at2(i, j) > logits.at2(i, best)) best = j;
    }
    if (static_cast<int>(best) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

// Stratified per-class subset of the training entries, seeded.
std::vector<std::size_t> label_fraction_subset(const std::vector<CorpusEntry>& train,
                                               double fraction, std::uint64_t seed,
                                               int num_classes) {
  if (fraction >= 1.0) {
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<std::size_t> subset;
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].seq.label == cls) members.push_back(i);
    }
    if (members.empty()) continue;
    RandomStream rng(mix_seed({seed, kTagSubset, static_cast<std::uint64_t>(cls)}));
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.uniform_index(i)]);
    }
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(fraction * static_cast<double>(members.size()))));
    members.resize(std::min(keep, members.size()));
    subset.insert(subset.end(), members.begin(), members.end());
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

std::string eval_canonical_text(const EvalConfig& cfg) {
  std::ostringstream out;
  out << "eval:\n  mode: " << (cfg.mode == EvalConfig::Mode::kLinear ? "linear" : "finetune")
      << "\n  epochs: " << cfg.epochs << "\n  batch_size: " << cfg.batch_size
      << "\n  peak_lr: " << fmt17(cfg.peak_lr) << "\n  floor_lr: " << fmt17(cfg.floor_lr)
      << "\n  warmup_epochs: " << cfg.warmup_epochs << "\n  momentum: " << fmt17(cfg.momentum)
      << "\n  layer_decay: " << fmt17(cfg.layer_decay)
      << "\n  weight_decay: " << fmt17(cfg.weight_decay) << "\n  beta1: " << fmt17(cfg.beta1)
      << "\n  beta2: " << fmt17(cfg.beta2)
      << "\n  label_fraction: " << fmt17(cfg.label_fraction) << "\n  pooling: " << cfg.pooling
      << "\n";
  return out.str();
}

}  // namespace

EvalResult probe_on_features(const DenseArray& x_train, const std::vector<int>& y_train,
                             const DenseArray& x_test, const std::vector<int>& y_test,
                             const EvalConfig& cfg) {
  cfg.validate();
  if (cfg.mode != EvalConfig::Mode::kLinear) {
    throw ContractViolation("probe_on_features: config mode is not linear");
  }
  if (x_train.rank() != 2 || x_test.rank() != 2 ||
      x_train.extent(1) != x_test.extent(1) || x_train.extent(0) != y_train.size() ||
      x_test.extent(0) != y_test.size() || y_train.empty() || y_test.empty()) {
    throw ContractViolation("probe_on_features: inconsistent feature/label shapes");
  }
  int max_label = 0;
  for (const int y : y_train) max_label = std::max(max_label, y);
  for (const int y : y_test) max_label = std::max(max_label, y);
  if (max_label < 1) throw DataError("corpus has fewer than 2 classes");
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t dim = x_train.extent(1);
  const std::size_t k = static_cast<std::size_t>(max_label) + 1;
  Parameter w = make_const_parameter("probe.w", {dim, k}, 0.0);
  Parameter b = make_const_parameter("probe.b", {k}, 0.0);
  SgdMomentum opt(cfg.momentum);
  opt.attach(w);
  opt.attach(b);

  const std::size_t n = y_train.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  ScheduleConfig sched{cfg.warmup_epochs, cfg.epochs, steps_per_epoch, cfg.peak_lr,
                       cfg.floor_lr};
  sched.validate();

  RunRecord record;
  record.config_hash = fnv1a(eval_canonical_text(cfg));
  record.provenance = "mamp-probe config=" + fmt_hex(record.config_hash) +
                      " seed=" + std::to_string(cfg.seed);

  Tape tape;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(n, mix_seed({cfg.seed, kTagEvalShuffle, epoch}));
    double epoch_loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      tape.clear();
      DenseArray batch({stop - start, dim});
      std::vector<int> labels(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        std::copy(x_train.data() + idx * dim, x_train.data() + (idx + 1) * dim,
                  batch.data() + (i - start) * dim);
        labels[i - start] = y_train[idx];
      }
      Tensor logits = tape.linear(tape.constant(std::move(batch)), tape.param(w), tape.param(b));
      Tensor loss = tape.cross_entropy(logits, labels);
      epoch_loss_sum += loss->value()[0] * static_cast<double>(stop - start);
      tape.backward(loss);
      ++step;
      opt.step(lr_at(step, sched));
      opt.zero_grads();
    }
    record.rows.push_back({epoch + 1, "train", "loss",
                           epoch_loss_sum / static_cast<double>(n)});
  }

  // Final accuracies from plain affine maps (no tape needed).
  const auto eval_logits = [&](const DenseArray& x) {
    const std::size_t rows = x.extent(0);
    DenseArray logits({rows, k});
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        double acc = b.value()[j];
        for (std::size_t d = 0; d < dim; ++d) acc += x.at2(i, d) * w.value().at2(d, j);
        logits.at2(i, j) = acc;
      }
    }
    return logits;
  };
  const double train_acc = top1_accuracy(eval_logits(x_train), y_train);
  const double test_acc = top1_accuracy(eval_logits(x_test), y_test);
  record.rows.push_back({cfg.epochs, "train", "accuracy", train_acc});
  record.rows.push_back({cfg.epochs, "test", "accuracy", test_acc});
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return EvalResult{test_acc, std::move(record)};
}

EvalResult linear_probe(ModelParams& params, const Corpus& corpus, const EvalConfig& cfg) {
  cfg.validate();
  if (cfg.mode != EvalConfig::Mode::kLinear) {
    throw ContractViolation("linear_probe: config mode is not linear");
  }
  if (corpus.train.empty() || corpus.test.empty()) {
    throw DataError("linear probe needs non-empty train and test splits");
  }
  check_entries_match_arch(corpus.train, params.cfg, "train");
  check_entries_match_arch(corpus.test, params.cfg, "test");
  count_classes(corpus);
  const auto t_start = std::chrono::steady_clock::now();

  const DenseArray x_train = corpus_features(params, corpus.train);
  const DenseArray x_test = corpus_features(params, corpus.test);
  EvalResult result = probe_on_features(x_train, entry_labels(corpus.train), x_test,
                                        entry_labels(corpus.test), cfg);
  result.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

std::vector<std::pair<std::string, double>> finetune_lr_multipliers(const ArchConfig& arch,
                                                                    double decay) {
  static constexpr const char* kBlockFields[] = {"ln1.g",  "ln1.b",  "qkv.w",  "qkv.b",
                                                 "attn.w", "attn.b", "ln2.g",  "ln2.b",
                                                 "mlp1.w", "mlp1.b", "mlp2.w", "mlp2.b"};
  std::vector<std::pair<std::string, double>> mults;
  mults.emplace_back("enc.ln.g", decay);
  mults.emplace_back("enc.ln.b", decay);
  for (std::size_t i = 0; i < arch.encoder_depth; ++i) {
    const double mult = std::pow(decay, static_cast<double>(arch.encoder_depth - i));
    for (const char* field : kBlockFields) {
      mults.emplace_back("enc." + std::to_string(i) + "." + field, mult);
    }
  }
  const double base_mult = std::pow(decay, static_cast<double>(arch.encoder_depth + 1));
  for (const char* name : {"embed.w", "embed.b", "enc.pos_s", "enc.pos_t"}) {
    mults.emplace_back(name, base_mult);
  }
  return mults;
}

EvalResult finetune(ModelParams& params, const Corpus& corpus, const EvalConfig& cfg) {
  cfg.validate();
  if (cfg.mode != EvalConfig::Mode::kFinetune) {
    throw ContractViolation("finetune: config mode is not finetune");
  }
  if (corpus.train.empty() || corpus.test.empty()) {
    throw DataError("finetune needs non-empty train and test splits");
  }
  check_entries_match_arch(corpus.train, params.cfg, "train");
  check_entries_match_arch(corpus.test, params.cfg, "test");
  const int num_classes = count_classes(corpus);
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t dim = params.cfg.embed_dim;
  const std::size_t k = static_cast<std::size_t>(num_classes);
  Parameter h1_w = make_weight_parameter("ft.h1.w", {dim, dim}, cfg.seed);
  Parameter h1_b = make_const_parameter("ft.h1.b", {dim}, 0.0);
  Parameter h2_w = make_weight_parameter("ft.h2.w", {dim, k}, cfg.seed);
  Parameter h2_b = make_const_parameter("ft.h2.b", {k}, 0.0);

  AdamW opt(AdamWConfig{cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay});
  for (Parameter* p : {&h1_w, &h1_b, &h2_w, &h2_b}) opt.attach(*p, 1.0);
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : params.all()) by_name[p->name()] = p;
  for (const auto& [name, mult] : finetune_lr_multipliers(params.cfg, cfg.layer_decay)) {
    opt.attach(*by_name.at(name), mult);
  }

  const auto subset =
      label_fraction_subset(corpus.train, cfg.label_fraction, cfg.seed, num_classes);
  const std::size_t n = subset.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  ScheduleConfig sched{cfg.warmup_epochs, cfg.epochs, steps_per_epoch, cfg.peak_lr,
                       cfg.floor_lr};
  sched.validate();

  RunRecord record;
  record.config_hash = fnv1a(eval_canonical_text(cfg));
  record.provenance = "mamp-finetune config=" + fmt_hex(record.config_hash) +
                      " seed=" + std::to_string(cfg.seed);

  const auto head_logits = [&](Tape& tape, Tensor features) {
    Tensor h = tape.gelu(tape.linear(features, tape.param(h1_w), tape.param(h1_b)));
    return tape.linear(h, tape.param(h2_w), tape.param(h2_b));
  };

  Tape tape;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(n, mix_seed({cfg.seed, kTagEvalShuffle, epoch}));
    double epoch_loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      tape.clear();
      std::vector<Tensor> losses;
      losses.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = subset[order[i]];
        const CorpusEntry& entry = corpus.train[idx];
        RandomStream view_rng(mix_seed({cfg.seed, kTagView, epoch, idx}));
        const DenseArray view = training_view(entry.seq, params.cfg.seq_len, view_rng);
        Tensor features = encode_features(tape, view, params);
        Tensor logits = head_logits(tape, features);
        losses.push_back(tape.cross_entropy(logits, {entry.seq.label}));
        epoch_loss_sum += losses.back()->value()[0];
      }
      Tensor batch_loss = tape.mean_of(losses);
      if (!std::isfinite(batch_loss->value()[0])) {
        throw NumericalError("finetune diverged: non-finite loss at step " +
                             std::to_string(step + 1));
      }
      tape.backward(batch_loss);
      ++step;
      opt.step(lr_at(step, sched));
      opt.zero_grads();
    }
    record.rows.push_back({epoch + 1, "train", "loss",
                           epoch_loss_sum / static_cast<double>(n)});
  }

  // Test accuracy with deterministic views, evaluation mode.
  Tape eval_tape;
  eval_tape.set_recording(false);
  DenseArray logits({corpus.test.size(), k});
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    eval_tape.clear();
    const DenseArray view = test_view(corpus.test[i].seq, params.cfg.seq_len);
    Tensor features = encode_features(eval_tape, view, params);
    Tensor out = head_logits(eval_tape, features);
    for (std::size_t j = 0; j < k; ++j) logits.at2(i, j) = out->value().at2(0, j);
  }
  const double test_acc = top1_accuracy(logits, entry_labels(corpus.test));
  record.rows.push_back({cfg.epochs, "test", "accuracy", test_acc});
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return EvalResult{test_acc, std::move(record)};
}

namespace {

struct AblationSetting {
  std::string label;
  PretrainConfig cfg;
};

std::vector<AblationSetting> axis_settings(const PretrainConfig& base, const std::string& axis) {
  std::vector<AblationSetting> settings;
  if (axis == "streams") {
    for (Stream in : {Stream::kJoint, Stream::kMotion}) {
      for (Stream target : {Stream::kJoint, Stream::kMotion}) {
        PretrainConfig cfg = base;
        cfg.arch.input_stream = in;
        cfg.arch.target_stream = target;
        settings.push_back({to_string(in) + "->" + to_string(target), cfg});
      }
    }
  } else if (axis == "masking") {
    for (MaskStrategy s : {MaskStrategy::kMotionAware, MaskStrategy::kRandom}) {
      PretrainConfig cfg = base;
      cfg.masking = s;
      settings.push_back({to_string(s), cfg});
    }
  } else if (axis == "segment") {
    const std::size_t t_e = base.arch.segments();
    for (std::size_t l : {2, 4, 6, 8}) {
      PretrainConfig cfg = base;
      cfg.arch.segment_len = l;
      cfg.arch.seq_len = l * t_e;  // hold the token count T_e fixed
      settings.push_back({std::to_string(l), cfg});
    }
  } else if (axis == "decoder-depth") {
    for (std::size_t depth : {2, 3, 4, 5}) {
      PretrainConfig cfg = base;
      cfg.arch.decoder_depth = depth;
      settings.push_back({std::to_string(depth), cfg});
    }
  } else if (axis == "decoder-width") {
    for (std::size_t width : {24, 48, 96}) {
      PretrainConfig cfg = base;
      cfg.arch.decoder_dim = width;
      settings.push_back({std::to_string(width), cfg});
    }
  } else if (axis == "mask-ratio") {
    for (double ratio : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
      PretrainConfig cfg = base;
      cfg.arch.mask_ratio = ratio;
      char buf[16];
      std::snprintf(buf, sizeof buf, "%g", ratio);
      settings.push_back({buf, cfg});
    }
  } else if (axis == "schedule") {
    for (std::size_t epochs : {25, 50, 100, 150}) {
      PretrainConfig cfg = base;
      cfg.epochs = epochs;
      cfg.warmup_epochs = std::max<std::size_t>(1, std::min(cfg.warmup_epochs, epochs / 5));
      settings.push_back({std::to_string(epochs), cfg});
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis +
                      "' (expected streams|masking|segment|decoder-depth|decoder-width|"
                      "mask-ratio|schedule)");
  }
  return settings;
}

}  // namespace

std::vector<AblationRow> run_ablation_suite(const PretrainConfig& base, const Corpus& corpus,
                                            const std::string& axis, std::size_t num_seeds) {
  if (num_seeds < 1) throw ConfigError("ablation: need at least one seed");
  const auto settings = axis_settings(base, axis);
  std::vector<AblationRow> rows;
  rows.reserve(settings.size() * num_seeds);
  for (const auto& setting : settings) {
    for (std::size_t s = 0; s < num_seeds; ++s) {
      PretrainConfig cfg = setting.cfg;
      cfg.seed = base.seed + s;
      PretrainResult pre = pretrain(cfg, corpus, "");
      EvalConfig probe_cfg = EvalConfig::linear_defaults();
      probe_cfg.seed = cfg.seed;
      const EvalResult probe = linear_probe(pre.params, corpus, probe_cfg);
      rows.push_back({axis, setting.label, cfg.seed, config_hash(cfg), probe.test_accuracy,
                      pre.final_loss});
    }
  }
  return rows;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "axis,setting,seed,config_hash,probe_accuracy,pretrain_final_loss\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << r.setting << ',' << r.seed << ',' << fmt_hex(r.config_hash) << ','
        << fmt17(r.probe_accuracy) << ',' << fmt17(r.pretrain_final_loss) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace mamp
