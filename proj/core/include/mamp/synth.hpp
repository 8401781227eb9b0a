#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "mamp/corpus.hpp"
#include "mamp/skeleton.hpp"

namespace mamp {

// Synthetic action corpus: every class is a set of traveling sinusoidal
// motion components (class-fixed spatial patterns, frequencies, and per-joint
// phase lags) over a shared rest pose, with per-sequence amplitude/phase/
// frequency jitter and Gaussian coordinate noise. Class identity lives in the
// dynamics, not the static pose.
struct SyntheticCorpusConfig {
  std::size_t num_classes = 8;
  std::size_t sequences_per_class = 70;
  std::size_t joints = 15;
  std::size_t channels = 3;
  std::size_t min_frames = 48;
  std::size_t max_frames = 64;
  std::size_t num_subjects = 7;
  std::size_t num_views = 3;
  std::size_t components_per_class = 1;

  // Component k of class c completes base_cycles + cycles_per_class*c +
  // 0.29*k cycles over a full sequence, jittered per sequence. The defaults
  // keep the class frequencies well below one cycle per sequence: slow,
  // near-monotone trajectories whose temporal differences a desk-scale
  // masked-motion model can actually learn, while the per-sequence phase,
  // amplitude, and frequency jitter keeps raw-pose statistics a weak class
  // cue. Faster multi-component mixtures remain one config away.
  double base_cycles = 0.05;
  double cycles_per_class = 0.03;
  double cycle_jitter = 0.10;     // relative, per sequence
  double amp_lo = 0.6;            // per-sequence amplitude band
  double amp_hi = 1.0;
  double phase_band = 1.0;        // per-sequence phase ~ U[0, 2*pi*phase_band)
  double noise_sigma = 0.01;

  std::uint64_t seed = 7;

  void validate() const;  // throws ConfigError on invariant breach
};

// Generates the sequence in memory (no IO). `index` selects the per-sequence
// jitter draw; subject/view ids are assigned round-robin by index.
SkeletonSequence synthesize_sequence(const SyntheticCorpusConfig& cfg, std::size_t class_id,
                                     std::size_t index);

// Writes seq_CCCC_IIII.txt files plus manifest.csv under out_dir and returns
// the manifest path. Deterministic given cfg.
std::string generate_synthetic_corpus(const SyntheticCorpusConfig& cfg,
                                      const std::string& out_dir);

}  // namespace mamp
