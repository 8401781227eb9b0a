#pragma once

#include <cstddef>
#include <string>

#include "mamp/array.hpp"
#include "mamp/rng.hpp"

namespace mamp {

// One skeleton sequence: frames is a [T, V, C] array of joint coordinates.
// label/subject_id/view_id are -1 when unknown.
struct SkeletonSequence {
  DenseArray frames;
  int label = -1;
  int subject_id = -1;
  int view_id = -1;

  std::size_t num_frames() const { return frames.extent(0); }
  std::size_t num_joints() const { return frames.extent(1); }
  std::size_t num_channels() const { return frames.extent(2); }

  void validate() const;  // throws DataError on invariant breach
};

// Text format: line 1 is "T V C"; then T lines of V*C floats, joint-major.
SkeletonSequence read_sequence_file(const std::string& path);
void write_sequence_file(const std::string& path, const SkeletonSequence& seq);

// Crops a contiguous temporal segment of length max(1, round(p*T)) — offset
// uniform when rng is given, centered otherwise — then resizes it to T_s
// frames with align-corners linear interpolation per joint/channel.
DenseArray crop_and_resize(const DenseArray& frames, double p, std::size_t target_len,
                           RandomStream* rng);

// Training augmentation: p ~ U[0.5, 1], random offset.
DenseArray training_view(const SkeletonSequence& seq, std::size_t target_len,
                         RandomStream& rng);

// Test-time view: p = 0.9, centered offset; deterministic.
DenseArray test_view(const SkeletonSequence& seq, std::size_t target_len);

}  // namespace mamp
