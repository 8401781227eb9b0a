#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mamp/array.hpp"
#include "mamp/rng.hpp"

namespace mamp {

// Learnable array with a persistent gradient accumulator. Parameters outlive
// the tapes that reference them; reverse passes add into grad().
class Parameter {
 public:
  Parameter(std::string name, DenseArray value)
      : name_(std::move(name)), value_(std::move(value)), grad_(value_.shape()) {}

  const std::string& name() const { return name_; }
  DenseArray& value() { return value_; }
  const DenseArray& value() const { return value_; }
  DenseArray& grad() { return grad_; }
  const DenseArray& grad() const { return grad_; }

  void zero_grad() {
    for (double& g : grad_.values()) g = 0.0;
  }

 private:
  std::string name_;
  DenseArray value_;
  DenseArray grad_;
};

struct TensorNode {
  DenseArray storage;
  const DenseArray* value_ptr = nullptr;
  DenseArray grad;  // allocated lazily during the reverse pass
  bool needs_grad = false;
  std::function<void()> backprop;

  const DenseArray& value() const { return *value_ptr; }
};

// Non-owning handle; the tape owns every node it creates.
using Tensor = TensorNode*;

// Optional introspection sink for attention calls: records the score-matrix
// shape per call and, when keep_probs is set, the softmaxed attention rows.
struct AttentionCapture {
  bool keep_probs = false;
  std::vector<std::array<std::size_t, 2>> score_shapes;
  std::vector<DenseArray> probs;  // one [heads, N, N] array per call
};

inline constexpr double kLayerNormEps = 1e-5;

// Records an operation graph over DenseArrays and runs exact reverse-mode
// differentiation through it. Creation order is a topological order, so the
// reverse pass is a single backwards sweep. One backward() per graph.
//
// With recording disabled the same ops run arithmetic-identical forward
// passes without building closures or tracking gradients.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  std::size_t node_count() const { return nodes_.size(); }
  void clear();

  Tensor constant(DenseArray value);
  Tensor param(Parameter& p);  // one shared node per parameter per tape

  Tensor add(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor scale(Tensor a, double s);
  Tensor sum(Tensor a);                                   // -> scalar
  Tensor mean_rows(Tensor x);                             // [N,D] -> [D]
  Tensor linear(Tensor x, Tensor w, Tensor b);            // [N,I]·[I,O]+[O]
  Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta); // row-wise
  Tensor gelu(Tensor x);

  // Fused multi-head self-attention over a packed [N, 3D] QKV matrix
  // (columns: D query, D key, D value). Returns [N, D].
  Tensor attention(Tensor qkv, std::size_t heads, AttentionCapture* capture = nullptr);

  // y[t*V + v] = x[t*V + v] + pos_spatial[v] + pos_temporal[t]
  Tensor add_positional(Tensor x, Tensor pos_spatial, Tensor pos_temporal);

  Tensor gather_rows(Tensor x, std::vector<std::size_t> rows);

  // out has total_rows rows; out[rows[i]] = x[i], every other row = fill.
  Tensor scatter_rows(Tensor x, std::vector<std::size_t> rows,
                      std::size_t total_rows, Tensor fill);

  Tensor dropout(Tensor x, double rate, RandomStream& rng);

  // Mean over the listed rows of the squared L2 distance between prediction
  // and target rows. Gradient touches only the listed rows.
  Tensor masked_sq_error(Tensor pred, const DenseArray& target,
                         const std::vector<std::size_t>& rows);

  // Softmax cross-entropy, mean over rows.
  Tensor cross_entropy(Tensor logits, const std::vector<int>& labels);

  Tensor mean_of(const std::vector<Tensor>& scalars);

  // Size-preserving shape change; gradient passes through unchanged.
  Tensor reshape(Tensor x, std::vector<std::size_t> shape);

  // Reverse pass from a scalar loss. Accumulates into Parameter::grad for
  // every reachable parameter; unreachable parameters are left untouched.
  void backward(Tensor loss);

 private:
  Tensor make_node(DenseArray value, bool needs_grad);
  bool track(std::initializer_list<Tensor> parents) const;

  std::vector<std::unique_ptr<TensorNode>> nodes_;
  std::unordered_map<Parameter*, Tensor> param_nodes_;
  bool recording_ = true;
};

}  // namespace mamp
