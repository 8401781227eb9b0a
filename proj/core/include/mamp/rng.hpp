#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mamp {

// FNV-1a over raw bytes; used for keying parameter init streams by name and
// hashing canonical config text.
std::uint64_t fnv1a(std::string_view bytes);

// Derives an independent child seed from a parent seed plus salt words.
// Every random decision in a run pulls from a stream keyed this way, so
// (seed, epoch, sample) fully determines augmentation and masking draws.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words);

// Deterministic random stream with hand-rolled distributions. Standard
// library distributions are implementation-defined, which would make
// checkpoints and metrics differ across toolchains.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  // Standard normal via Box-Muller; draws two uniforms per sample.
  double normal();

  // Normal with stddev sigma, rejection-sampled into [-cut*sigma, cut*sigma].
  double truncated_normal(double sigma, double cut = 2.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mamp
