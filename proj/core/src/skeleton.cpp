#include "mamp/skeleton.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mamp/error.hpp"

namespace mamp {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void SkeletonSequence::validate() const {
  if (frames.rank() != 3) {
    throw DataError("sequence frames must be rank 3, got shape " + shape_str(frames.shape()));
  }
  if (frames.extent(0) < 1 || frames.extent(1) < 1 || frames.extent(2) < 1) {
    throw DataError("sequence extents must all be >= 1, got " + shape_str(frames.shape()));
  }
  if (!frames.all_finite()) throw DataError("sequence contains non-finite coordinates");
}

SkeletonSequence read_sequence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sequence file: " + path);

  std::string header;
  if (!std::getline(in, header)) parse_fail(path, 1, "missing header line");
  std::istringstream hs(header);
  long long t = 0, v = 0, c = 0;
  if (!(hs >> t >> v >> c) || t < 1 || v < 1 || c < 1) {
    parse_fail(path, 1, "malformed header, expected \"T V C\" positive integers");
  }
  std::string trailing;
  if (hs >> trailing) parse_fail(path, 1, "trailing tokens after header");

  SkeletonSequence seq;
  seq.frames = DenseArray({static_cast<std::size_t>(t), static_cast<std::size_t>(v),
                           static_cast<std::size_t>(c)});
  const std::size_t row_len = static_cast<std::size_t>(v * c);
  std::string line;
  for (long long i = 0; i < t; ++i) {
    if (!std::getline(in, line)) {
      parse_fail(path, static_cast<std::size_t>(i) + 2,
                 "header promises " + std::to_string(t) + " frames, file has " +
                     std::to_string(i));
    }
    std::istringstream ls(line);
    for (std::size_t j = 0; j < row_len; ++j) {
      double x = 0.0;
      if (!(ls >> x)) {
        parse_fail(path, static_cast<std::size_t>(i) + 2,
                   "expected " + std::to_string(row_len) + " values, found " + std::to_string(j));
      }
      if (!std::isfinite(x)) {
        parse_fail(path, static_cast<std::size_t>(i) + 2, "non-finite value");
      }
      seq.frames[static_cast<std::size_t>(i) * row_len + j] = x;
    }
    if (ls >> line) {
      parse_fail(path, static_cast<std::size_t>(i) + 2,
                 "more than " + std::to_string(row_len) + " values on frame line");
    }
  }
  return seq;
}

void write_sequence_file(const std::string& path, const SkeletonSequence& seq) {
  seq.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  const std::size_t t = seq.num_frames();
  const std::size_t row_len = seq.num_joints() * seq.num_channels();
  out << t << ' ' << seq.num_joints() << ' ' << seq.num_channels() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < row_len; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", seq.frames[i * row_len + j]);
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

DenseArray crop_and_resize(const DenseArray& frames, double p, std::size_t target_len,
                           RandomStream* rng) {
  if (frames.rank() != 3) {
    throw ContractViolation("crop_and_resize: frames must be [T,V,C]");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw ContractViolation("crop_and_resize: proportion must be in (0,1]");
  }
  if (target_len < 2) throw ContractViolation("crop_and_resize: target length must be >= 2");
  const std::size_t t = frames.extent(0);
  const std::size_t row_len = frames.extent(1) * frames.extent(2);

  const auto rounded = static_cast<std::size_t>(std::llround(p * static_cast<double>(t)));
  const std::size_t crop_len = std::max<std::size_t>(1, std::min(rounded, t));
  const std::size_t max_start = t - crop_len;
  const std::size_t start = rng ? rng->uniform_index(max_start + 1) : max_start / 2;

  DenseArray out({target_len, frames.extent(1), frames.extent(2)});
  const double* src = frames.data() + start * row_len;
  for (std::size_t k = 0; k < target_len; ++k) {
    double* dst = out.data() + k * row_len;
    if (crop_len == 1) {
      for (std::size_t j = 0; j < row_len; ++j) dst[j] = src[j];
      continue;
    }
    const double pos = static_cast<double>(k) * static_cast<double>(crop_len - 1) /
                       static_cast<double>(target_len - 1);
    const auto i0 = static_cast<std::size_t>(pos);
    if (i0 >= crop_len - 1) {
      const double* a = src + (crop_len - 1) * row_len;
      for (std::size_t j = 0; j < row_len; ++j) dst[j] = a[j];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    const double* a = src + i0 * row_len;
    const double* b = a + row_len;
    for (std::size_t j = 0; j < row_len; ++j) dst[j] = (1.0 - frac) * a[j] + frac * b[j];
  }
  return out;
}

DenseArray training_view(const SkeletonSequence& seq, std::size_t target_len,
                         RandomStream& rng) {
  const double p = rng.uniform(0.5, 1.0);
  return crop_and_resize(seq.frames, p, target_len, &rng);
}

DenseArray test_view(const SkeletonSequence& seq, std::size_t target_len) {
  return crop_and_resize(seq.frames, 0.9, target_len, nullptr);
}

}  // namespace mamp
