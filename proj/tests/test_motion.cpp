// Motion extraction, intensity, masking probabilities, Gumbel top-K.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "mamp/error.hpp"
#include "mamp/motion.hpp"
#include "mamp/rng.hpp"

using namespace mamp;

namespace {

DenseArray column(std::vector<double> frames) {
  const std::size_t t_len = frames.size();
  return DenseArray({t_len, 1, 1}, std::move(frames));
}

// Brute-force reference for extract_motion.
DenseArray motion_oracle(const DenseArray& s, std::size_t m, MotionPadding padding) {
  const std::size_t t_len = s.extent(0), per_frame = s.extent(1) * s.extent(2);
  DenseArray out(s.shape());
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < per_frame; ++j) {
      if (t >= m) {
        out[t * per_frame + j] = s[t * per_frame + j] - s[(t - m) * per_frame + j];
      } else if (padding == MotionPadding::kReplicate) {
        out[t * per_frame + j] =
            s[(t + m) * per_frame + j] - s[t * per_frame + j];
      } else {
        out[t * per_frame + j] = 0.0;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("extract_motion: constant sequence gives zero motion") {
  const DenseArray s = DenseArray::full({6, 2, 3}, 0.75);
  for (const MotionPadding pad : {MotionPadding::kConstantZero, MotionPadding::kReplicate}) {
    const MotionSequence m = extract_motion(s, 2, pad);
    for (const double v : m.values.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("extract_motion: S=[0,1,3,6], m=1, zeros -> M=[0,1,2,3]") {
  const MotionSequence m =
      extract_motion(column({0, 1, 3, 6}), 1, MotionPadding::kConstantZero);
  CHECK(m.values[0] == 0.0);
  CHECK(m.values[1] == 1.0);
  CHECK(m.values[2] == 2.0);
  CHECK(m.values[3] == 3.0);
  CHECK(m.stride == 1);
}

TEST_CASE("extract_motion: S=[0,1,3,6], m=2, replicate -> M=[3,5,3,5]") {
  const MotionSequence m = extract_motion(column({0, 1, 3, 6}), 2, MotionPadding::kReplicate);
  CHECK(m.values[0] == 3.0);
  CHECK(m.values[1] == 5.0);
  CHECK(m.values[2] == 3.0);
  CHECK(m.values[3] == 5.0);
}

TEST_CASE("extract_motion: stride bounds") {
  const DenseArray s = DenseArray::full({4, 1, 1}, 0.0);
  CHECK_THROWS_AS(extract_motion(s, 4, MotionPadding::kConstantZero), ContractViolation);
  CHECK_THROWS_AS(extract_motion(s, 0, MotionPadding::kConstantZero), ContractViolation);
  // Replicate needs 2m <= T to have real frames to copy.
  CHECK_THROWS_AS(extract_motion(s, 3, MotionPadding::kReplicate), ContractViolation);
}

TEST_CASE("extract_motion matches the brute-force oracle on random cases") {
  RandomStream rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t_len = 8 + rng.uniform_index(9);
    const std::size_t joints = 1 + rng.uniform_index(4);
    const std::size_t channels = 1 + rng.uniform_index(3);
    DenseArray s({t_len, joints, channels});
    for (double& v : s.values()) v = rng.normal();
    for (const std::size_t m : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
      for (const MotionPadding pad :
           {MotionPadding::kConstantZero, MotionPadding::kReplicate}) {
        const DenseArray expect = motion_oracle(s, m, pad);
        const MotionSequence got = extract_motion(s, m, pad);
        for (std::size_t i = 0; i < expect.size(); ++i) CHECK(got.values[i] == expect[i]);
      }
    }
  }
}

TEST_CASE("extract_motion is translation invariant") {
  RandomStream rng(22);
  DenseArray s({10, 3, 2});
  for (double& v : s.values()) v = rng.normal();
  DenseArray shifted = s;
  for (double& v : shifted.values()) v += 17.25;
  for (const MotionPadding pad : {MotionPadding::kConstantZero, MotionPadding::kReplicate}) {
    const MotionSequence a = extract_motion(s, 2, pad);
    const MotionSequence b = extract_motion(shifted, 2, pad);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      // The invariant is exact in reals; floating point leaves rounding noise.
      CHECK(std::fabs(a.values[i] - b.values[i]) < 1e-12);
    }
  }
}

TEST_CASE("motion_intensity: zero motion, worked example, l*C identity") {
  CHECK(motion_intensity(DenseArray::full({4, 2, 3}, 0.0), 2).at2(1, 1) == 0.0);

  const DenseArray m({4, 1, 1}, {1.0, -2.0, 0.5, 0.5});
  const DenseArray intensity = motion_intensity(m, 2);
  REQUIRE(intensity.shape() == std::vector<std::size_t>{2, 1});
  CHECK(intensity.at2(0, 0) == 3.0);
  CHECK(intensity.at2(1, 0) == 1.0);

  const DenseArray ones = DenseArray::full({6, 4, 3}, 1.0);
  const DenseArray all = motion_intensity(ones, 2);
  for (const double v : all.values()) CHECK(v == 6.0);

  CHECK_THROWS_AS(motion_intensity(m, 3), ContractViolation);
}

TEST_CASE("masking_probabilities: uniform, closed form, large-temperature limit") {
  const DenseArray uniform_i = DenseArray::full({3, 5}, 2.0);
  const DenseArray pi = masking_probabilities(uniform_i, 1.0);
  for (const double v : pi.values()) CHECK(v == doctest::Approx(1.0 / 15.0).epsilon(1e-12));

  const DenseArray two({2, 1}, {0.0, 1.0});
  const DenseArray soft = masking_probabilities(two, 1.0);
  CHECK(soft[0] == doctest::Approx(0.26894).epsilon(1e-4));
  CHECK(soft[1] == doctest::Approx(0.73106).epsilon(1e-4));

  RandomStream rng(23);
  DenseArray random_i({4, 4});
  for (double& v : random_i.values()) v = rng.uniform(0.0, 5.0);
  const DenseArray flat = masking_probabilities(random_i, 1e9);
  for (const double v : flat.values()) CHECK(std::fabs(v - 1.0 / 16.0) < 1e-6);

  const DenseArray warm = masking_probabilities(random_i, 0.7);
  double total = 0.0;
  for (const double v : warm.values()) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(masking_probabilities(random_i, 0.0), ContractViolation);
}

TEST_CASE("masking_probabilities: coordinate scaling equals temperature scaling") {
  RandomStream rng(24);
  DenseArray intensity({3, 4});
  for (double& v : intensity.values()) v = rng.uniform(0.0, 3.0);
  const double s = 2.75;
  DenseArray scaled = intensity;
  for (double& v : scaled.values()) v *= s;
  const DenseArray a = masking_probabilities(scaled, 1.0);
  const DenseArray b = masking_probabilities(intensity, 1.0 / s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("sample_mask: ratio endpoints and partition invariant") {
  const DenseArray pi = DenseArray::full({3, 4}, 1.0 / 12.0);
  RandomStream rng(25);
  const MaskPlan none = sample_mask(pi, 0.0, rng);
  CHECK(none.masked.empty());
  CHECK(none.unmasked.size() == 12);
  const MaskPlan all = sample_mask(pi, 1.0, rng);
  CHECK(all.masked.size() == 12);
  CHECK(all.unmasked.empty());

  for (int trial = 0; trial < 50; ++trial) {
    const MaskPlan plan = sample_mask(pi, 0.4, rng);
    CHECK(plan.masked.size() == 5);  // round(0.4*12)
    CHECK(plan.unmasked.size() == 7);
    std::vector<bool> seen(12, false);
    for (const std::size_t i : plan.masked) seen[i] = true;
    for (const std::size_t i : plan.unmasked) {
      CHECK_FALSE(seen[i]);
      seen[i] = true;
    }
    for (const bool hit : seen) CHECK(hit);
    CHECK(std::is_sorted(plan.masked.begin(), plan.masked.end()));
    CHECK(std::is_sorted(plan.unmasked.begin(), plan.unmasked.end()));
  }
}

TEST_CASE("sample_mask: uniform pi over 4 tokens, K=2 -> inclusion 0.5 each") {
  const DenseArray pi = DenseArray::full({2, 2}, 0.25);
  RandomStream rng(26);
  std::vector<int> hits(4, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    for (const std::size_t idx : sample_mask(pi, 0.5, rng).masked) ++hits[idx];
  }
  for (const int h : hits) {
    CHECK(std::fabs(static_cast<double>(h) / draws - 0.5) < 0.01);
  }
}

TEST_CASE("sample_mask_random: endpoints and hypergeometric marginals") {
  RandomStream rng(27);
  const MaskPlan all = sample_mask_random(6, 1.0, rng);
  CHECK(all.masked.size() == 6);
  CHECK(all.unmasked.empty());

  std::vector<int> hits(5, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const MaskPlan plan = sample_mask_random(5, 0.4, rng);
    CHECK(plan.masked.size() == 2);
    for (const std::size_t idx : plan.masked) ++hits[idx];
  }
  for (const int h : hits) {
    CHECK(std::fabs(static_cast<double>(h) / draws - 0.4) < 0.01);
  }
}

TEST_CASE("sample_mask with uniform pi matches sample_mask_random in distribution") {
  const std::size_t n = 6;
  const double ratio = 0.5;  // K = 3
  const DenseArray pi = DenseArray::full({n, 1}, 1.0 / static_cast<double>(n));
  RandomStream rng_a(28), rng_b(29);
  const int draws = 200000;
  std::vector<double> freq_a(n, 0.0), freq_b(n, 0.0);
  for (int i = 0; i < draws; ++i) {
    for (const std::size_t idx : sample_mask(pi, ratio, rng_a).masked) freq_a[idx] += 1.0;
    for (const std::size_t idx : sample_mask_random(n, ratio, rng_b).masked) {
      freq_b[idx] += 1.0;
    }
  }
  const double p = 0.5;
  const double se = std::sqrt(2.0 * p * (1.0 - p) / draws);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::fabs(freq_a[i] / draws - freq_b[i] / draws) < 4.0 * se);
  }
}

TEST_CASE("mask_count rounds half away from zero and clamps") {
  CHECK(mask_count(750, 0.9) == 675);
  CHECK(mask_count(3, 0.5) == 2);  // 1.5 rounds away from zero
  CHECK(mask_count(12, 1.0) == 12);
  CHECK(mask_count(12, 0.0) == 0);
}
