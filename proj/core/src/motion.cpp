#include "mamp/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mamp/error.hpp"

namespace mamp {

MotionSequence extract_motion(const DenseArray& frames, std::size_t stride,
                              MotionPadding padding) {
  if (frames.rank() != 3) throw ContractViolation("extract_motion: frames must be [T,V,C]");
  const std::size_t t = frames.extent(0);
  const std::size_t row_len = frames.extent(1) * frames.extent(2);
  if (stride < 1 || stride >= t) {
    throw ContractViolation("extract_motion: need 1 <= stride < T, got stride " +
                            std::to_string(stride) + " for T " + std::to_string(t));
  }
  if (padding == MotionPadding::kReplicate && 2 * stride > t) {
    throw ContractViolation(
        "extract_motion: replicate padding needs 2*stride <= T (frames " +
        std::to_string(stride) + ".." + std::to_string(2 * stride - 1) + " must exist)");
  }
  MotionSequence out;
  out.values = DenseArray(frames.shape());
  out.stride = stride;
  out.padding = padding;
  const double* src = frames.data();
  double* dst = out.values.data();
  for (std::size_t i = stride; i < t; ++i) {
    for (std::size_t j = 0; j < row_len; ++j) {
      dst[i * row_len + j] = src[i * row_len + j] - src[(i - stride) * row_len + j];
    }
  }
  if (padding == MotionPadding::kReplicate) {
    for (std::size_t i = 0; i < stride; ++i) {
      for (std::size_t j = 0; j < row_len; ++j) {
        dst[i * row_len + j] = dst[(i + stride) * row_len + j];
      }
    }
  }
  // Constant-zero padding: frames 0..stride-1 stay at the zero fill.
  return out;
}

DenseArray motion_intensity(const DenseArray& motion, std::size_t segment_len) {
  if (motion.rank() != 3) throw ContractViolation("motion_intensity: motion must be [T,V,C]");
  const std::size_t t = motion.extent(0);
  const std::size_t v = motion.extent(1);
  const std::size_t c = motion.extent(2);
  if (segment_len < 1 || t % segment_len != 0) {
    throw ContractViolation("motion_intensity: T " + std::to_string(t) +
                            " not divisible by segment length " + std::to_string(segment_len));
  }
  const std::size_t t_e = t / segment_len;
  DenseArray intensity({t_e, v});
  for (std::size_t seg = 0; seg < t_e; ++seg) {
    for (std::size_t f = 0; f < segment_len; ++f) {
      const std::size_t frame = seg * segment_len + f;
      for (std::size_t vi = 0; vi < v; ++vi) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < c; ++ci) acc += std::abs(motion.at3(frame, vi, ci));
        intensity.at2(seg, vi) += acc;
      }
    }
  }
  return intensity;
}

DenseArray masking_probabilities(const DenseArray& intensity, double temperature) {
  if (!(temperature > 0.0)) {
    throw ContractViolation("masking_probabilities: temperature must be > 0");
  }
  if (intensity.rank() != 2) {
    throw ContractViolation("masking_probabilities: intensity must be [T_e,V]");
  }
  DenseArray pi(intensity.shape());
  const auto& iv = intensity.values();
  double mx = iv[0] / temperature;
  for (double x : iv) mx = std::max(mx, x / temperature);
  double total = 0.0;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    pi[i] = std::exp(iv[i] / temperature - mx);
    total += pi[i];
  }
  const double inv = 1.0 / total;
  for (double& p : pi.values()) p *= inv;
  return pi;
}

std::size_t mask_count(std::size_t token_count, double mask_ratio) {
  if (mask_ratio < 0.0 || mask_ratio > 1.0) {
    throw ContractViolation("mask_count: mask_ratio must be in [0,1]");
  }
  const auto k = static_cast<std::size_t>(
      std::llround(mask_ratio * static_cast<double>(token_count)));
  return std::min(k, token_count);
}

namespace {

MaskPlan plan_from_masked(std::vector<std::size_t> masked, std::size_t token_count,
                          double mask_ratio) {
  std::sort(masked.begin(), masked.end());
  MaskPlan plan;
  plan.mask_ratio = mask_ratio;
  plan.masked = std::move(masked);
  plan.unmasked.reserve(token_count - plan.masked.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < token_count; ++i) {
    if (next < plan.masked.size() && plan.masked[next] == i) {
      ++next;
    } else {
      plan.unmasked.push_back(i);
    }
  }
  return plan;
}

}  // namespace

MaskPlan sample_mask(const DenseArray& probabilities, double mask_ratio, RandomStream& rng) {
  const std::size_t n = probabilities.size();
  if (n == 0) throw ContractViolation("sample_mask: empty probability grid");
  const std::size_t k = mask_count(n, mask_ratio);

  struct Keyed {
    double key;
    std::size_t idx;
  };
  std::vector<Keyed> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = std::clamp(rng.uniform01(), 1e-12, 1.0 - 1e-12);
    const double gumbel = -std::log(-std::log(eps));
    keys[i] = Keyed{std::log(probabilities[i]) + gumbel, i};
  }
  std::sort(keys.begin(), keys.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key > b.key;
    return a.idx < b.idx;
  });
  std::vector<std::size_t> masked(k);
  for (std::size_t i = 0; i < k; ++i) masked[i] = keys[i].idx;
  return plan_from_masked(std::move(masked), n, mask_ratio);
}

MaskPlan sample_mask_random(std::size_t token_count, double mask_ratio, RandomStream& rng) {
  if (token_count == 0) throw ContractViolation("sample_mask_random: empty token grid");
  const std::size_t k = mask_count(token_count, mask_ratio);
  std::vector<std::size_t> pool(token_count);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(token_count - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return plan_from_masked(std::move(pool), token_count, mask_ratio);
}

}  // namespace mamp
