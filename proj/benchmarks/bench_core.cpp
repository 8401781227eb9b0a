#include <benchmark/benchmark.h>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mamp/autodiff.hpp"
#include "mamp/model.hpp"
#include "mamp/motion.hpp"
#include "mamp/optim.hpp"
#include "mamp/rng.hpp"
#include "mamp/skeleton.hpp"
#include "mamp/synth.hpp"
#include "mamp/train.hpp"

namespace {

using namespace mamp;

DenseArray random_array(std::vector<std::size_t> shape, std::uint64_t seed) {
  DenseArray out(std::move(shape));
  RandomStream rng(seed);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

// One desk-scale training view: a synthetic sequence cropped and resized to
// the default architecture's [seq_len, joints, channels].
DenseArray desk_view(const ArchConfig& arch, std::uint64_t seed) {
  SyntheticCorpusConfig synth;
  synth.joints = arch.joints;
  synth.channels = arch.channels;
  const SkeletonSequence seq = synthesize_sequence(synth, 0, 0);
  RandomStream rng(seed);
  return training_view(seq, arch.seq_len, rng);
}

void BM_Linear(benchmark::State& state) {
  // Encoder MLP expansion at desk scale: [tokens, C_e] x [C_e, mlp_hidden].
  const ArchConfig arch = desk_arch();
  const std::size_t n = arch.token_count();
  Parameter w("w", random_array({arch.embed_dim, arch.mlp_hidden}, 1));
  Parameter b("b", random_array({arch.mlp_hidden}, 2));
  const DenseArray x = random_array({n, arch.embed_dim}, 3);
  Tape tape;
  tape.set_recording(false);
  for (auto _ : state) {
    tape.clear();
    Tensor y = tape.linear(tape.constant(x), tape.param(w), tape.param(b));
    benchmark::DoNotOptimize(y->value().data());
  }
}
BENCHMARK(BM_Linear);

void BM_LayerNorm(benchmark::State& state) {
  const ArchConfig arch = desk_arch();
  Parameter g("g", random_array({arch.embed_dim}, 1));
  Parameter b("b", random_array({arch.embed_dim}, 2));
  const DenseArray x = random_array({arch.token_count(), arch.embed_dim}, 3);
  Tape tape;
  tape.set_recording(false);
  for (auto _ : state) {
    tape.clear();
    Tensor y = tape.layer_norm(tape.constant(x), tape.param(g), tape.param(b));
    benchmark::DoNotOptimize(y->value().data());
  }
}
BENCHMARK(BM_LayerNorm);

void BM_Attention(benchmark::State& state) {
  // Fused multi-head attention over the full desk token grid.
  const ArchConfig arch = desk_arch();
  const DenseArray qkv = random_array({arch.token_count(), 3 * arch.embed_dim}, 1);
  Tape tape;
  tape.set_recording(false);
  for (auto _ : state) {
    tape.clear();
    Tensor y = tape.attention(tape.constant(qkv), arch.heads);
    benchmark::DoNotOptimize(y->value().data());
  }
}
BENCHMARK(BM_Attention);

void BM_ExtractMotion(benchmark::State& state) {
  const ArchConfig arch = desk_arch();
  const DenseArray view = desk_view(arch, 11);
  for (auto _ : state) {
    MotionSequence motion =
        extract_motion(view, arch.target_stride, arch.target_padding);
    benchmark::DoNotOptimize(motion.values.data());
  }
}
BENCHMARK(BM_ExtractMotion);

void BM_MotionAwareMask(benchmark::State& state) {
  // Masking chain: intensity, softmax, Gumbel top-K over the desk token grid.
  const ArchConfig arch = desk_arch();
  const DenseArray view = desk_view(arch, 11);
  const MotionSequence motion =
      extract_motion(view, arch.target_stride, arch.target_padding);
  RandomStream rng(19);
  for (auto _ : state) {
    const DenseArray intensity = motion_intensity(motion.values, arch.segment_len);
    const DenseArray probs = masking_probabilities(intensity, 1.0);
    MaskPlan plan = sample_mask(probs, arch.mask_ratio, rng);
    benchmark::DoNotOptimize(plan.masked.data());
  }
}
BENCHMARK(BM_MotionAwareMask);

void BM_TrainingView(benchmark::State& state) {
  const ArchConfig arch = desk_arch();
  SyntheticCorpusConfig synth;
  synth.joints = arch.joints;
  synth.channels = arch.channels;
  const SkeletonSequence seq = synthesize_sequence(synth, 0, 0);
  RandomStream rng(23);
  for (auto _ : state) {
    DenseArray view = training_view(seq, arch.seq_len, rng);
    benchmark::DoNotOptimize(view.data());
  }
}
BENCHMARK(BM_TrainingView);

void BM_ForwardPretrain(benchmark::State& state) {
  // Full masked forward pass (no gradient recording) at desk scale.
  const ArchConfig arch = desk_arch();
  ModelParams params = init_params(arch, 7);
  const DenseArray view = desk_view(arch, 11);
  PretrainForwardOptions opts;
  RandomStream mask_rng(19);
  Tape tape;
  tape.set_recording(false);
  for (auto _ : state) {
    tape.clear();
    ForwardArtifacts art = forward_pretrain(tape, view, params, opts, &mask_rng);
    benchmark::DoNotOptimize(art.loss);
  }
}
BENCHMARK(BM_ForwardPretrain);

void BM_PretrainStep(benchmark::State& state) {
  // Forward + reverse pass + AdamW update for one sample: the unit of
  // pre-training cost.
  const ArchConfig arch = desk_arch();
  ModelParams params = init_params(arch, 7);
  AdamW opt(AdamWConfig{});
  for (Parameter* p : params.all()) opt.attach(*p);
  const DenseArray view = desk_view(arch, 11);
  PretrainForwardOptions opts;
  RandomStream mask_rng(19);
  Tape tape;
  for (auto _ : state) {
    tape.clear();
    ForwardArtifacts art = forward_pretrain(tape, view, params, opts, &mask_rng);
    tape.backward(art.loss_node);
    opt.step(1e-3);
    opt.zero_grads();
    benchmark::DoNotOptimize(art.loss);
  }
}
BENCHMARK(BM_PretrainStep);

void BM_EncodeFeatures(benchmark::State& state) {
  // Frozen-backbone feature extraction as used by the linear probe.
  const ArchConfig arch = desk_arch();
  ModelParams params = init_params(arch, 7);
  const DenseArray view = desk_view(arch, 11);
  Tape tape;
  tape.set_recording(false);
  for (auto _ : state) {
    tape.clear();
    Tensor pooled = encode_features(tape, view, params);
    benchmark::DoNotOptimize(pooled->value().data());
  }
}
BENCHMARK(BM_EncodeFeatures);

}  // namespace

BENCHMARK_MAIN();
