#include "mamp/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

#include "mamp/error.hpp"
#include "mamp/rng.hpp"

namespace mamp {

namespace {

// Seed-mixing purpose tags.
constexpr std::uint64_t kTagRest = 0xA11CE;
constexpr std::uint64_t kTagClass = 0xC1A55;
constexpr std::uint64_t kTagSeq = 0x5E9;

struct ClassSignature {
  // Per component: spatial pattern [V*C], per-joint phase lag [V], cycles.
  std::vector<DenseArray> patterns;
  std::vector<std::vector<double>> joint_phase;
  std::vector<double> cycles;
};

ClassSignature make_signature(const SyntheticCorpusConfig& cfg, std::size_t class_id) {
  RandomStream rng(mix_seed({cfg.seed, kTagClass, class_id}));
  ClassSignature sig;
  const std::size_t vc = cfg.joints * cfg.channels;
  for (std::size_t k = 0; k < cfg.components_per_class; ++k) {
    DenseArray pattern({cfg.joints, cfg.channels});
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < vc; ++i) {
      pattern[i] = rng.normal();
      norm_sq += pattern[i] * pattern[i];
    }
    const double inv = 1.0 / std::sqrt(norm_sq / static_cast<double>(vc));
    for (std::size_t i = 0; i < vc; ++i) pattern[i] *= inv;
    sig.patterns.push_back(std::move(pattern));

    std::vector<double> lags(cfg.joints);
    for (double& lag : lags) lag = rng.uniform(0.0, 2.0 * std::numbers::pi);
    sig.joint_phase.push_back(std::move(lags));

    sig.cycles.push_back(cfg.base_cycles + cfg.cycles_per_class * static_cast<double>(class_id) +
                         0.29 * static_cast<double>(k));
  }
  return sig;
}

DenseArray make_rest_pose(const SyntheticCorpusConfig& cfg) {
  RandomStream rng(mix_seed({cfg.seed, kTagRest}));
  DenseArray pose({cfg.joints, cfg.channels});
  for (double& x : pose.values()) x = rng.uniform(-1.0, 1.0);
  return pose;
}

}  // namespace

void SyntheticCorpusConfig::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic corpus: num_classes must be >= 2");
  if (sequences_per_class < 1) throw ConfigError("synthetic corpus: sequences_per_class >= 1");
  if (joints < 1 || channels < 1) throw ConfigError("synthetic corpus: joints/channels >= 1");
  if (min_frames < 8 || max_frames > 10000 || min_frames > max_frames) {
    throw ConfigError("synthetic corpus: frame range must lie within [8, 10000]");
  }
  if (num_subjects < 1 || num_views < 1) throw ConfigError("synthetic corpus: ids >= 1");
  if (components_per_class < 1) throw ConfigError("synthetic corpus: components >= 1");
  if (!(amp_lo > 0.0 && amp_lo <= amp_hi)) throw ConfigError("synthetic corpus: bad amp band");
  if (noise_sigma < 0.0) throw ConfigError("synthetic corpus: negative noise sigma");
  if (phase_band < 0.0 || phase_band > 1.0) {
    throw ConfigError("synthetic corpus: phase_band must be in [0,1]");
  }
  if (cycle_jitter < 0.0 || cycle_jitter >= 1.0) {
    throw ConfigError("synthetic corpus: cycle_jitter must be in [0,1)");
  }
}

SkeletonSequence synthesize_sequence(const SyntheticCorpusConfig& cfg, std::size_t class_id,
                                     std::size_t index) {
  cfg.validate();
  if (class_id >= cfg.num_classes || index >= cfg.sequences_per_class) {
    throw ContractViolation("synthesize_sequence: class or index out of range");
  }
  const DenseArray rest = make_rest_pose(cfg);
  const ClassSignature sig = make_signature(cfg, class_id);

  RandomStream rng(mix_seed({cfg.seed, kTagSeq, class_id, index}));
  const std::size_t t =
      cfg.min_frames + rng.uniform_index(cfg.max_frames - cfg.min_frames + 1);

  struct Draw {
    double amp, phase, cycles;
  };
  std::vector<Draw> draws(sig.patterns.size());
  for (auto& d : draws) {
    d.amp = rng.uniform(cfg.amp_lo, cfg.amp_hi);
    d.phase = rng.uniform(0.0, 2.0 * std::numbers::pi * cfg.phase_band);
  }
  for (std::size_t k = 0; k < draws.size(); ++k) {
    draws[k].cycles = sig.cycles[k] * (1.0 + rng.uniform(-cfg.cycle_jitter, cfg.cycle_jitter));
  }

  SkeletonSequence seq;
  seq.frames = DenseArray({t, cfg.joints, cfg.channels});
  seq.label = static_cast<int>(class_id);
  seq.subject_id = static_cast<int>(index % cfg.num_subjects);
  seq.view_id = static_cast<int>(index % cfg.num_views);

  const double denom = static_cast<double>(t - 1);
  for (std::size_t ti = 0; ti < t; ++ti) {
    const double u = static_cast<double>(ti) / denom;
    for (std::size_t v = 0; v < cfg.joints; ++v) {
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        double x = rest.at2(v, c);
        for (std::size_t k = 0; k < draws.size(); ++k) {
          const double angle = 2.0 * std::numbers::pi * draws[k].cycles * u + draws[k].phase +
                               sig.joint_phase[k][v];
          x += draws[k].amp * sig.patterns[k].at2(v, c) * std::sin(angle);
        }
        seq.frames.at3(ti, v, c) = x;
      }
    }
  }
  if (cfg.noise_sigma > 0.0) {
    for (double& x : seq.frames.values()) x += cfg.noise_sigma * rng.normal();
  }
  return seq;
}

std::string generate_synthetic_corpus(const SyntheticCorpusConfig& cfg,
                                      const std::string& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());

  std::vector<ManifestRow> rows;
  char name[64];
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    for (std::size_t i = 0; i < cfg.sequences_per_class; ++i) {
      SkeletonSequence seq = synthesize_sequence(cfg, c, i);
      std::snprintf(name, sizeof name, "seq_%04zu_%04zu.txt", c, i);
      write_sequence_file((std::filesystem::path(out_dir) / name).string(), seq);
      rows.push_back(ManifestRow{name, seq.label, seq.subject_id, seq.view_id});
    }
  }
  const auto manifest = (std::filesystem::path(out_dir) / "manifest.csv").string();
  write_manifest(manifest, rows);
  return manifest;
}

}  // namespace mamp
