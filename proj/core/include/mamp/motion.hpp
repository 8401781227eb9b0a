#pragma once

#include <cstddef>
#include <vector>

#include "mamp/array.hpp"
#include "mamp/rng.hpp"

namespace mamp {

enum class MotionPadding { kConstantZero, kReplicate };

// Temporal-difference motion M[i] = S[i] - S[i-m]; the first m frames are
// filled per the padding mode (zeros, or copies of frames m..2m-1).
struct MotionSequence {
  DenseArray values;  // same [T, V, C] shape as the source
  std::size_t stride = 1;
  MotionPadding padding = MotionPadding::kConstantZero;
};

MotionSequence extract_motion(const DenseArray& frames, std::size_t stride,
                              MotionPadding padding);

// Motion intensity: per spatio-temporal segment (l frames x 1 joint), the sum of
// absolute motion values over frames and channels. Output is [T_e, V].
DenseArray motion_intensity(const DenseArray& motion, std::size_t segment_len);

// Masking probabilities: softmax(I / tau) over the flattened T_e*V grid.
DenseArray masking_probabilities(const DenseArray& intensity, double temperature);

// Partition of the flattened token grid (flat index = t*V + v); both lists
// sorted ascending.
struct MaskPlan {
  std::vector<std::size_t> masked;
  std::vector<std::size_t> unmasked;
  double mask_ratio = 0.0;
  std::size_t token_count() const { return masked.size() + unmasked.size(); }
};

// Number of masked tokens: round(mask_ratio * token_count), half away from
// zero.
std::size_t mask_count(std::size_t token_count, double mask_ratio);

// Gumbel-perturbed top-K selection. Draws one epsilon per token in
// flat-index order, keys log(pi) + g, ties broken toward the lowest index.
MaskPlan sample_mask(const DenseArray& probabilities, double mask_ratio, RandomStream& rng);

// Uniform baseline: K distinct tokens uniformly at random.
MaskPlan sample_mask_random(std::size_t token_count, double mask_ratio, RandomStream& rng);

}  // namespace mamp
