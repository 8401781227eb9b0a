#include "mamp/model.hpp"

#include <cmath>
#include <utility>

#include "mamp/error.hpp"

namespace mamp {

std::string to_string(Stream s) { return s == Stream::kJoint ? "joint" : "motion"; }

std::string to_string(MaskStrategy s) {
  return s == MaskStrategy::kMotionAware ? "motion-aware" : "random";
}

std::string to_string(MotionPadding p) {
  return p == MotionPadding::kConstantZero ? "zero" : "replicate";
}

Stream stream_from_string(const std::string& s) {
  if (s == "joint") return Stream::kJoint;
  if (s == "motion") return Stream::kMotion;
  throw ConfigError("unknown stream '" + s + "' (expected joint|motion)");
}

MaskStrategy mask_strategy_from_string(const std::string& s) {
  if (s == "motion-aware") return MaskStrategy::kMotionAware;
  if (s == "random") return MaskStrategy::kRandom;
  throw ConfigError("unknown masking strategy '" + s + "' (expected motion-aware|random)");
}

MotionPadding padding_from_string(const std::string& s) {
  if (s == "zero") return MotionPadding::kConstantZero;
  if (s == "replicate") return MotionPadding::kReplicate;
  throw ConfigError("unknown padding '" + s + "' (expected zero|replicate)");
}

void ArchConfig::validate() const {
  if (joints < 1 || channels < 1) throw ConfigError("arch: joints and channels must be >= 1");
  if (segment_len < 1 || seq_len < 2) throw ConfigError("arch: need segment_len >= 1, T_s >= 2");
  if (seq_len % segment_len != 0) {
    throw ConfigError("arch: T_s " + std::to_string(seq_len) + " not divisible by l " +
                      std::to_string(segment_len));
  }
  if (embed_dim < 1 || decoder_dim < 1 || heads < 1 || mlp_hidden < 1) {
    throw ConfigError("arch: dims and heads must be >= 1");
  }
  if (embed_dim % heads != 0 || decoder_dim % heads != 0) {
    throw ConfigError("arch: C_e and C_d must be divisible by the head count");
  }
  if (mask_ratio < 0.0 || mask_ratio > 1.0) throw ConfigError("arch: mask_ratio in [0,1]");
  if (target_stride < 1 || target_stride >= seq_len) {
    throw ConfigError("arch: need 1 <= target_stride < T_s");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("arch: dropout in [0,1)");
}

namespace {

constexpr double kInitSigma = 0.02;
constexpr std::uint64_t kTagInit = 0x1417;

Parameter weight_param(const std::string& name, std::vector<std::size_t> shape,
                       std::uint64_t seed) {
  DenseArray value(std::move(shape));
  RandomStream rng(mix_seed({seed, kTagInit, fnv1a(name)}));
  for (double& x : value.values()) x = rng.truncated_normal(kInitSigma, 2.0);
  return Parameter(name, std::move(value));
}

Parameter normal_param(const std::string& name, std::vector<std::size_t> shape,
                       std::uint64_t seed) {
  DenseArray value(std::move(shape));
  RandomStream rng(mix_seed({seed, kTagInit, fnv1a(name)}));
  for (double& x : value.values()) x = kInitSigma * rng.normal();
  return Parameter(name, std::move(value));
}

Parameter const_param(const std::string& name, std::vector<std::size_t> shape, double v) {
  return Parameter(name, DenseArray::full(std::move(shape), v));
}

BlockParams make_block(const std::string& prefix, std::size_t dim, std::size_t hidden,
                       std::uint64_t seed) {
  return BlockParams{
      const_param(prefix + ".ln1.g", {dim}, 1.0),
      const_param(prefix + ".ln1.b", {dim}, 0.0),
      weight_param(prefix + ".qkv.w", {dim, 3 * dim}, seed),
      const_param(prefix + ".qkv.b", {3 * dim}, 0.0),
      weight_param(prefix + ".attn.w", {dim, dim}, seed),
      const_param(prefix + ".attn.b", {dim}, 0.0),
      const_param(prefix + ".ln2.g", {dim}, 1.0),
      const_param(prefix + ".ln2.b", {dim}, 0.0),
      weight_param(prefix + ".mlp1.w", {dim, hidden}, seed),
      const_param(prefix + ".mlp1.b", {hidden}, 0.0),
      weight_param(prefix + ".mlp2.w", {hidden, dim}, seed),
      const_param(prefix + ".mlp2.b", {dim}, 0.0),
  };
}

std::vector<BlockParams> make_blocks(const std::string& prefix, std::size_t depth,
                                     std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  std::vector<BlockParams> blocks;
  blocks.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) {
    blocks.push_back(make_block(prefix + "." + std::to_string(i), dim, hidden, seed));
  }
  return blocks;
}

std::vector<Parameter> make_bridge(const ArchConfig& cfg, std::uint64_t seed) {
  std::vector<Parameter> bridge;
  if (cfg.embed_dim != cfg.decoder_dim) {
    bridge.push_back(weight_param("bridge.w", {cfg.embed_dim, cfg.decoder_dim}, seed));
    bridge.push_back(const_param("bridge.b", {cfg.decoder_dim}, 0.0));
  }
  return bridge;
}

}  // namespace

void BlockParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&ln1_g, &ln1_b, &qkv_w, &qkv_b, &attn_w, &attn_b, &ln2_g, &ln2_b,
                       &mlp1_w, &mlp1_b, &mlp2_w, &mlp2_b}) {
    out.push_back(p);
  }
}

ModelParams::ModelParams(const ArchConfig& arch, std::uint64_t seed)
    : cfg(arch),
      embed_w(weight_param("embed.w", {arch.token_dim(), arch.embed_dim}, seed)),
      embed_b(const_param("embed.b", {arch.embed_dim}, 0.0)),
      enc_pos_s(normal_param("enc.pos_s", {arch.joints, arch.embed_dim}, seed)),
      enc_pos_t(normal_param("enc.pos_t", {arch.segments(), arch.embed_dim}, seed)),
      encoder(make_blocks("enc", arch.encoder_depth, arch.embed_dim, arch.mlp_hidden, seed)),
      enc_ln_g(const_param("enc.ln.g", {arch.embed_dim}, 1.0)),
      enc_ln_b(const_param("enc.ln.b", {arch.embed_dim}, 0.0)),
      bridge(make_bridge(arch, seed)),
      mask_token(normal_param("mask_token", {arch.decoder_dim}, seed)),
      dec_pos_s(normal_param("dec.pos_s", {arch.joints, arch.decoder_dim}, seed)),
      dec_pos_t(normal_param("dec.pos_t", {arch.segments(), arch.decoder_dim}, seed)),
      decoder(make_blocks("dec", arch.decoder_depth, arch.decoder_dim, arch.mlp_hidden, seed)),
      dec_ln_g(const_param("dec.ln.g", {arch.decoder_dim}, 1.0)),
      dec_ln_b(const_param("dec.ln.b", {arch.decoder_dim}, 0.0)),
      head_w(weight_param("head.w", {arch.decoder_dim, arch.token_dim()}, seed)),
      head_b(const_param("head.b", {arch.token_dim()}, 0.0)) {
  cfg.validate();
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  out.reserve(16 + 12 * (encoder.size() + decoder.size()));
  out.push_back(&embed_w);
  out.push_back(&embed_b);
  out.push_back(&enc_pos_s);
  out.push_back(&enc_pos_t);
  for (auto& b : encoder) b.collect(out);
  out.push_back(&enc_ln_g);
  out.push_back(&enc_ln_b);
  for (auto& p : bridge) out.push_back(&p);
  out.push_back(&mask_token);
  out.push_back(&dec_pos_s);
  out.push_back(&dec_pos_t);
  for (auto& b : decoder) b.collect(out);
  out.push_back(&dec_ln_g);
  out.push_back(&dec_ln_b);
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

ModelParams init_params(const ArchConfig& cfg, std::uint64_t seed) {
  return ModelParams(cfg, seed);
}

Parameter make_weight_parameter(const std::string& name, std::vector<std::size_t> shape,
                                std::uint64_t seed) {
  return weight_param(name, std::move(shape), seed);
}

Parameter make_const_parameter(const std::string& name, std::vector<std::size_t> shape,
                               double value) {
  return const_param(name, std::move(shape), value);
}

DenseArray segment_reshape(const DenseArray& frames, std::size_t segment_len) {
  if (frames.rank() != 3) throw ContractViolation("segment_reshape: frames must be [T,V,C]");
  const std::size_t t = frames.extent(0);
  const std::size_t v = frames.extent(1);
  const std::size_t c = frames.extent(2);
  if (segment_len < 1 || t % segment_len != 0) {
    throw ContractViolation("segment_reshape: T " + std::to_string(t) +
                            " not divisible by l " + std::to_string(segment_len));
  }
  const std::size_t t_e = t / segment_len;
  DenseArray out({t_e, v, segment_len * c});
  for (std::size_t seg = 0; seg < t_e; ++seg) {
    for (std::size_t vi = 0; vi < v; ++vi) {
      for (std::size_t f = 0; f < segment_len; ++f) {
        for (std::size_t ci = 0; ci < c; ++ci) {
          out.at3(seg, vi, f * c + ci) = frames.at3(seg * segment_len + f, vi, ci);
        }
      }
    }
  }
  return out;
}

DenseArray normalize_target(const DenseArray& segments) {
  if (segments.rank() != 3) {
    throw ContractViolation("normalize_target: expected [T_e,V,D] segments");
  }
  const std::size_t rows = segments.extent(0) * segments.extent(1);
  const std::size_t d = segments.extent(2);
  DenseArray out(segments.shape());
  const double* src = segments.data();
  double* dst = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = src + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double cdev = x[j] - mean;
      var += cdev * cdev;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / (std::sqrt(var) + 1e-6);
    for (std::size_t j = 0; j < d; ++j) dst[r * d + j] = (x[j] - mean) * inv;
  }
  return out;
}

Tensor transformer_stack(Tape& tape, Tensor tokens, std::vector<BlockParams>& blocks,
                         Parameter& final_ln_g, Parameter& final_ln_b, std::size_t heads,
                         AttentionCapture* capture, double dropout_rate,
                         RandomStream* dropout_rng) {
  if (dropout_rate > 0.0 && dropout_rng == nullptr) {
    throw ContractViolation("transformer_stack: dropout needs a random stream");
  }
  Tensor x = tokens;
  for (BlockParams& b : blocks) {
    Tensor h = tape.layer_norm(x, tape.param(b.ln1_g), tape.param(b.ln1_b));
    Tensor qkv = tape.linear(h, tape.param(b.qkv_w), tape.param(b.qkv_b));
    Tensor att = tape.attention(qkv, heads, capture);
    att = tape.linear(att, tape.param(b.attn_w), tape.param(b.attn_b));
    if (dropout_rate > 0.0) att = tape.dropout(att, dropout_rate, *dropout_rng);
    x = tape.add(x, att);

    Tensor h2 = tape.layer_norm(x, tape.param(b.ln2_g), tape.param(b.ln2_b));
    Tensor mid = tape.gelu(tape.linear(h2, tape.param(b.mlp1_w), tape.param(b.mlp1_b)));
    Tensor mlp_out = tape.linear(mid, tape.param(b.mlp2_w), tape.param(b.mlp2_b));
    if (dropout_rate > 0.0) mlp_out = tape.dropout(mlp_out, dropout_rate, *dropout_rng);
    x = tape.add(x, mlp_out);
  }
  return tape.layer_norm(x, tape.param(final_ln_g), tape.param(final_ln_b));
}

Tensor insert_mask_tokens(Tape& tape, Tensor encoded_unmasked, const MaskPlan& plan,
                          ModelParams& params) {
  if (encoded_unmasked->value().extent(0) != plan.unmasked.size()) {
    throw ContractViolation("insert_mask_tokens: row count " +
                            std::to_string(encoded_unmasked->value().extent(0)) +
                            " != unmasked count " + std::to_string(plan.unmasked.size()));
  }
  Tensor projected = encoded_unmasked;
  if (!params.bridge.empty()) {
    projected = tape.linear(projected, tape.param(params.bridge[0]),
                            tape.param(params.bridge[1]));
  }
  return tape.scatter_rows(projected, plan.unmasked, plan.token_count(),
                           tape.param(params.mask_token));
}

namespace {

// Input/target stream selection: raw joints, or temporal-difference motion
// with the configured target stride and padding.
DenseArray stream_frames(const DenseArray& view, Stream stream, const ArchConfig& cfg) {
  if (stream == Stream::kJoint) return view;
  return extract_motion(view, cfg.target_stride, cfg.target_padding).values;
}

}  // namespace

ForwardArtifacts forward_pretrain(Tape& tape, const DenseArray& view, ModelParams& params,
                                  const PretrainForwardOptions& opt, RandomStream* mask_rng) {
  const ArchConfig& cfg = params.cfg;
  if (view.rank() != 3 || view.extent(0) != cfg.seq_len || view.extent(1) != cfg.joints ||
      view.extent(2) != cfg.channels) {
    throw ContractViolation("forward_pretrain: view shape " + shape_str(view.shape()) +
                            " does not match arch [T_s,V,C_s]");
  }
  ForwardArtifacts art;

  if (opt.fixed_plan) {
    art.plan = *opt.fixed_plan;
  } else {
    if (!mask_rng) throw ContractViolation("forward_pretrain: mask sampling needs an rng");
    if (opt.strategy == MaskStrategy::kMotionAware) {
      // Masking guide: intensity from the m=l replicate-padded motion of the raw view.
      const MotionSequence guide =
          extract_motion(view, cfg.segment_len, MotionPadding::kReplicate);
      const DenseArray intensity = motion_intensity(guide.values, cfg.segment_len);
      const DenseArray pi = masking_probabilities(intensity, opt.temperature);
      art.plan = sample_mask(pi, cfg.mask_ratio, *mask_rng);
    } else {
      art.plan = sample_mask_random(cfg.token_count(), cfg.mask_ratio, *mask_rng);
    }
  }
  if (art.plan.token_count() != cfg.token_count()) {
    throw ContractViolation("forward_pretrain: mask plan grid does not match token grid");
  }

  art.encoder_attn.keep_probs = opt.keep_attention_probs;
  art.decoder_attn.keep_probs = opt.keep_attention_probs;

  const DenseArray input = stream_frames(view, cfg.input_stream, cfg);
  const DenseArray tokens3 = segment_reshape(input, cfg.segment_len);
  Tensor tokens =
      tape.constant(tokens3.reshaped({cfg.token_count(), cfg.token_dim()}));

  Tensor e = tape.linear(tokens, tape.param(params.embed_w), tape.param(params.embed_b));
  art.embedded = e->value();
  Tensor e_p = tape.add_positional(e, tape.param(params.enc_pos_s), tape.param(params.enc_pos_t));
  art.positioned = e_p->value();

  Tensor selected = tape.gather_rows(e_p, art.plan.unmasked);
  art.selected = selected->value();

  Tensor encoded = transformer_stack(tape, selected, params.encoder, params.enc_ln_g,
                                     params.enc_ln_b, cfg.heads, &art.encoder_attn,
                                     cfg.dropout, mask_rng);
  art.encoder_out = encoded->value();

  Tensor z0 = insert_mask_tokens(tape, encoded, art.plan, params);
  art.decoder_in = z0->value();
  Tensor z = tape.add_positional(z0, tape.param(params.dec_pos_s), tape.param(params.dec_pos_t));
  z = transformer_stack(tape, z, params.decoder, params.dec_ln_g, params.dec_ln_b, cfg.heads,
                        &art.decoder_attn, cfg.dropout, mask_rng);
  art.decoder_out = z->value();

  Tensor pred = tape.linear(z, tape.param(params.head_w), tape.param(params.head_b));
  art.predictions = pred->value();

  const DenseArray target_frames = stream_frames(view, cfg.target_stream, cfg);
  const DenseArray target_norm = normalize_target(segment_reshape(target_frames, cfg.segment_len));
  art.target = target_norm.reshaped({cfg.token_count(), cfg.token_dim()});

  art.loss_node = tape.masked_sq_error(pred, art.target, art.plan.masked);
  art.loss = art.loss_node->value()[0];
  return art;
}

Tensor encode_features(Tape& tape, const DenseArray& view, ModelParams& params,
                       AttentionCapture* capture) {
  const ArchConfig& cfg = params.cfg;
  if (view.rank() != 3 || view.extent(0) != cfg.seq_len || view.extent(1) != cfg.joints ||
      view.extent(2) != cfg.channels) {
    throw ContractViolation("encode_features: view shape " + shape_str(view.shape()) +
                            " does not match arch [T_s,V,C_s]");
  }
  const DenseArray input = stream_frames(view, cfg.input_stream, cfg);
  const DenseArray tokens3 = segment_reshape(input, cfg.segment_len);
  Tensor tokens = tape.constant(tokens3.reshaped({cfg.token_count(), cfg.token_dim()}));
  Tensor e = tape.linear(tokens, tape.param(params.embed_w), tape.param(params.embed_b));
  Tensor e_p = tape.add_positional(e, tape.param(params.enc_pos_s), tape.param(params.enc_pos_t));
  Tensor encoded = transformer_stack(tape, e_p, params.encoder, params.enc_ln_g,
                                     params.enc_ln_b, cfg.heads, capture);
  Tensor pooled = tape.mean_rows(encoded);
  return tape.reshape(pooled, {1, cfg.embed_dim});
}

}  // namespace mamp
