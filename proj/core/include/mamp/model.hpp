#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mamp/array.hpp"
#include "mamp/autodiff.hpp"
#include "mamp/motion.hpp"
#include "mamp/rng.hpp"

namespace mamp {

enum class Stream { kJoint, kMotion };
enum class MaskStrategy { kMotionAware, kRandom };

std::string to_string(Stream s);
std::string to_string(MaskStrategy s);
std::string to_string(MotionPadding p);
Stream stream_from_string(const std::string& s);
MaskStrategy mask_strategy_from_string(const std::string& s);
MotionPadding padding_from_string(const std::string& s);

// Network architecture. Defaults are the full-scale reference values; the
// harness swaps in the desk-scale configuration.
struct ArchConfig {
  std::size_t joints = 25;        // V
  std::size_t channels = 3;       // C_s
  std::size_t segment_len = 4;    // l
  std::size_t seq_len = 120;      // T_s
  std::size_t embed_dim = 256;    // C_e
  std::size_t encoder_depth = 8;  // L_e
  std::size_t decoder_depth = 5;  // L_d
  std::size_t decoder_dim = 256;  // C_d
  std::size_t heads = 8;
  std::size_t mlp_hidden = 1024;
  double mask_ratio = 0.9;
  std::size_t target_stride = 1;  // m for the prediction target
  MotionPadding target_padding = MotionPadding::kConstantZero;
  Stream input_stream = Stream::kJoint;
  Stream target_stream = Stream::kMotion;
  double dropout = 0.0;

  std::size_t segments() const { return seq_len / segment_len; }       // T_e
  std::size_t token_dim() const { return segment_len * channels; }     // l*C_s
  std::size_t token_count() const { return segments() * joints; }      // T_e*V
  void validate() const;  // throws ConfigError on invariant breach
};

// One pre-LN transformer block: x += MSA(LN(x)); x += MLP(LN(x)).
struct BlockParams {
  Parameter ln1_g, ln1_b;
  Parameter qkv_w, qkv_b;
  Parameter attn_w, attn_b;
  Parameter ln2_g, ln2_b;
  Parameter mlp1_w, mlp1_b;
  Parameter mlp2_w, mlp2_b;

  void collect(std::vector<Parameter*>& out);
};

// Every learnable array of the MAMP network, in a stable named order.
struct ModelParams {
  ArchConfig cfg;

  Parameter embed_w, embed_b;
  Parameter enc_pos_s, enc_pos_t;
  std::vector<BlockParams> encoder;
  Parameter enc_ln_g, enc_ln_b;
  std::vector<Parameter> bridge;  // {w, b} when C_e != C_d, else empty
  Parameter mask_token;
  Parameter dec_pos_s, dec_pos_t;
  std::vector<BlockParams> decoder;
  Parameter dec_ln_g, dec_ln_b;
  Parameter head_w, head_b;

  ModelParams(const ArchConfig& cfg, std::uint64_t seed);
  ModelParams(const ModelParams&) = delete;
  ModelParams& operator=(const ModelParams&) = delete;
  ModelParams(ModelParams&&) = default;
  ModelParams& operator=(ModelParams&&) = default;

  // All parameters in checkpoint order. Pointers are invalidated by moving
  // the ModelParams; attach optimizers only to a settled instance.
  std::vector<Parameter*> all();
};

// Deterministic initialization: linear weights ~ truncated normal(0.02, cut
// 2 sigma), biases 0, LayerNorm scale 1 / shift 0, positional embeddings and
// mask token ~ normal(0.02). Each parameter draws from its own stream keyed
// by (seed, name), so values do not depend on construction order.
ModelParams init_params(const ArchConfig& cfg, std::uint64_t seed);

// The same initializers, exposed for auxiliary heads (probe/finetune).
Parameter make_weight_parameter(const std::string& name, std::vector<std::size_t> shape,
                                std::uint64_t seed);
Parameter make_const_parameter(const std::string& name, std::vector<std::size_t> shape,
                               double value);

// Segment reshape: [T_s, V, C_s] -> [T_e, V, l*C_s]; segment t holds
// frames t*l..t*l+l-1, flattened frame-major then channel.
DenseArray segment_reshape(const DenseArray& frames, std::size_t segment_len);

// Target normalization: per (t, v) token, subtract the mean and divide
// by the population standard deviation (+1e-6) over the l*C_s values.
DenseArray normalize_target(const DenseArray& segments);

// Transformer stack over [N, D] tokens: depth pre-LN blocks, then the
// trailing LayerNorm. dropout_rng may be null when rate is 0.
Tensor transformer_stack(Tape& tape, Tensor tokens, std::vector<BlockParams>& blocks,
                         Parameter& final_ln_g, Parameter& final_ln_b, std::size_t heads,
                         AttentionCapture* capture = nullptr, double dropout_rate = 0.0,
                         RandomStream* dropout_rng = nullptr);

// Mask-token insertion: unmasked rows receive the (bridge-projected)
// encoder outputs at their original grid positions, masked rows the shared
// mask token. Returns [T_e*V, C_d].
Tensor insert_mask_tokens(Tape& tape, Tensor encoded_unmasked, const MaskPlan& plan,
                          ModelParams& params);

struct PretrainForwardOptions {
  MaskStrategy strategy = MaskStrategy::kMotionAware;
  double temperature = 1.0;
  const MaskPlan* fixed_plan = nullptr;  // overrides sampling when set
  bool keep_attention_probs = false;
};

// Value snapshots of every pipeline stage plus the live loss node.
struct ForwardArtifacts {
  MaskPlan plan;
  DenseArray embedded;          // E             [T_e*V, C_e]
  DenseArray positioned;        // E_p           [T_e*V, C_e]
  DenseArray selected;          // E_p^u         [N_u,  C_e]
  DenseArray encoder_out;       // H_e^u         [N_u,  C_e]
  DenseArray decoder_in;        // Z_0 before pos [T_e*V, C_d]
  DenseArray decoder_out;       // Z_{L_d} after LN [T_e*V, C_d]
  DenseArray predictions;       // M^pred        [T_e*V, l*C_s]
  DenseArray target;            // normalized    [T_e*V, l*C_s]
  double loss = 0.0;
  Tensor loss_node = nullptr;
  AttentionCapture encoder_attn;
  AttentionCapture decoder_attn;
};

// The full masked-prediction pipeline on one [T_s, V, C_s] view. mask_rng
// may be null only when opt.fixed_plan is set (and dropout is 0).
ForwardArtifacts forward_pretrain(Tape& tape, const DenseArray& view, ModelParams& params,
                                  const PretrainForwardOptions& opt, RandomStream* mask_rng);

// Zero-masking encoder pass, mean-pooled over all T_e*V token outputs.
// Returns a [1, C_e] tensor on the tape.
Tensor encode_features(Tape& tape, const DenseArray& view, ModelParams& params,
                       AttentionCapture* capture = nullptr);

}  // namespace mamp
