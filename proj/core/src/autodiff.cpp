#include "mamp/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "mamp/error.hpp"

namespace mamp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;

MapM as_matrix(DenseArray& a, std::size_t rows, std::size_t cols) {
  return MapM(a.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

CMapM as_matrix(const DenseArray& a, std::size_t rows, std::size_t cols) {
  return CMapM(a.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

DenseArray& grad_of(TensorNode* n) {
  if (n->grad.empty()) n->grad = DenseArray(n->value().shape());
  return n->grad;
}

void require_rank(const Tensor t, std::size_t rank, const char* op) {
  if (t->value().rank() != rank) {
    throw ContractViolation(std::string(op) + ": expected rank " + std::to_string(rank) +
                            ", got shape " + shape_str(t->value().shape()));
  }
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

Tensor Tape::make_node(DenseArray value, bool needs_grad) {
  auto node = std::make_unique<TensorNode>();
  node->storage = std::move(value);
  node->value_ptr = &node->storage;
  node->needs_grad = needs_grad && recording_;
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

bool Tape::track(std::initializer_list<Tensor> parents) const {
  if (!recording_) return false;
  return std::any_of(parents.begin(), parents.end(),
                     [](Tensor p) { return p->needs_grad; });
}

Tensor Tape::constant(DenseArray value) { return make_node(std::move(value), false); }

Tensor Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return it->second;
  auto node = std::make_unique<TensorNode>();
  node->value_ptr = &p.value();
  node->needs_grad = recording_;
  Tensor t = node.get();
  if (recording_) {
    Parameter* pp = &p;
    node->backprop = [t, pp] {
      const auto& g = t->grad.values();
      auto& acc = pp->grad().values();
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    };
  }
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, t);
  return t;
}

Tensor Tape::add(Tensor a, Tensor b) {
  if (!a->value().same_shape(b->value())) {
    throw ContractViolation("add: shape mismatch " + shape_str(a->value().shape()) +
                            " vs " + shape_str(b->value().shape()));
  }
  DenseArray out(a->value().shape());
  const auto& av = a->value().values();
  const auto& bv = b->value().values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Tensor y = make_node(std::move(out), track({a, b}));
  if (y->needs_grad) {
    y->backprop = [y, a, b] {
      const auto& g = y->grad.values();
      if (a->needs_grad) {
        auto& ga = grad_of(a).values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b->needs_grad) {
        auto& gb = grad_of(b).values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
  }
  return y;
}

Tensor Tape::mul(Tensor a, Tensor b) {
  if (!a->value().same_shape(b->value())) {
    throw ContractViolation("mul: shape mismatch");
  }
  DenseArray out(a->value().shape());
  const auto& av = a->value().values();
  const auto& bv = b->value().values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tensor y = make_node(std::move(out), track({a, b}));
  if (y->needs_grad) {
    y->backprop = [y, a, b] {
      const auto& g = y->grad.values();
      if (a->needs_grad) {
        auto& ga = grad_of(a).values();
        const auto& bv = b->value().values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b->needs_grad) {
        auto& gb = grad_of(b).values();
        const auto& av = a->value().values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    };
  }
  return y;
}

Tensor Tape::scale(Tensor a, double s) {
  DenseArray out(a->value().shape());
  const auto& av = a->value().values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  Tensor y = make_node(std::move(out), track({a}));
  if (y->needs_grad) {
    y->backprop = [y, a, s] {
      const auto& g = y->grad.values();
      auto& ga = grad_of(a).values();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
    };
  }
  return y;
}

Tensor Tape::sum(Tensor a) {
  double total = 0.0;
  for (double v : a->value().values()) total += v;
  Tensor y = make_node(DenseArray::scalar(total), track({a}));
  if (y->needs_grad) {
    y->backprop = [y, a] {
      const double g = y->grad[0];
      auto& ga = grad_of(a).values();
      for (double& x : ga) x += g;
    };
  }
  return y;
}

Tensor Tape::mean_rows(Tensor x) {
  require_rank(x, 2, "mean_rows");
  const std::size_t n = x->value().extent(0), d = x->value().extent(1);
  DenseArray out({d});
  const double* xv = x->value().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += xv[i * d + j];
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(n);
  Tensor y = make_node(std::move(out), track({x}));
  if (y->needs_grad) {
    y->backprop = [y, x, n, d] {
      const double* g = y->grad.data();
      double* gx = grad_of(x).data();
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j] * inv;
    };
  }
  return y;
}

Tensor Tape::linear(Tensor x, Tensor w, Tensor b) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  require_rank(b, 1, "linear");
  const std::size_t n = x->value().extent(0);
  const std::size_t in = x->value().extent(1);
  const std::size_t out_dim = w->value().extent(1);
  if (w->value().extent(0) != in || b->value().extent(0) != out_dim) {
    throw ContractViolation("linear: inconsistent shapes x" + shape_str(x->value().shape()) +
                            " w" + shape_str(w->value().shape()) + " b" +
                            shape_str(b->value().shape()));
  }
  DenseArray out({n, out_dim});
  as_matrix(out, n, out_dim).noalias() = as_matrix(x->value(), n, in) * as_matrix(w->value(), in, out_dim);
  {
    const double* bv = b->value().data();
    double* ov = out.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < out_dim; ++j) ov[i * out_dim + j] += bv[j];
  }
  Tensor y = make_node(std::move(out), track({x, w, b}));
  if (y->needs_grad) {
    y->backprop = [y, x, w, b, n, in, out_dim] {
      auto gy = as_matrix(y->grad, n, out_dim);
      if (x->needs_grad) {
        as_matrix(grad_of(x), n, in).noalias() +=
            gy * as_matrix(w->value(), in, out_dim).transpose();
      }
      if (w->needs_grad) {
        as_matrix(grad_of(w), in, out_dim).noalias() +=
            as_matrix(x->value(), n, in).transpose() * gy;
      }
      if (b->needs_grad) {
        double* gb = grad_of(b).data();
        const double* g = y->grad.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < out_dim; ++j) gb[j] += g[i * out_dim + j];
      }
    };
  }
  return y;
}

Tensor Tape::layer_norm(Tensor x, Tensor gamma, Tensor beta) {
  require_rank(x, 2, "layer_norm");
  const std::size_t n = x->value().extent(0), d = x->value().extent(1);
  if (gamma->value().size() != d || beta->value().size() != d) {
    throw ContractViolation("layer_norm: scale/shift size mismatch");
  }
  DenseArray out({n, d});
  DenseArray xhat({n, d});
  DenseArray inv_std({n});
  const double* xv = x->value().data();
  const double* gv = gamma->value().data();
  const double* bv = beta->value().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * inv;
      xhat[i * d + j] = h;
      out[i * d + j] = h * gv[j] + bv[j];
    }
  }
  Tensor y = make_node(std::move(out), track({x, gamma, beta}));
  if (y->needs_grad) {
    auto saved_xhat = std::make_shared<DenseArray>(std::move(xhat));
    auto saved_inv = std::make_shared<DenseArray>(std::move(inv_std));
    y->backprop = [y, x, gamma, beta, n, d, saved_xhat, saved_inv] {
      const double* g = y->grad.data();
      const double* h = saved_xhat->data();
      const double* gv = gamma->value().data();
      if (gamma->needs_grad) {
        double* gg = grad_of(gamma).data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gg[j] += g[i * d + j] * h[i * d + j];
      }
      if (beta->needs_grad) {
        double* gb = grad_of(beta).data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
      }
      if (x->needs_grad) {
        double* gx = grad_of(x).data();
        for (std::size_t i = 0; i < n; ++i) {
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dh = g[i * d + j] * gv[j];
            m1 += dh;
            m2 += dh * h[i * d + j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          const double inv = (*saved_inv)[i];
          for (std::size_t j = 0; j < d; ++j) {
            const double dh = g[i * d + j] * gv[j];
            gx[i * d + j] += inv * (dh - m1 - h[i * d + j] * m2);
          }
        }
      }
    };
  }
  return y;
}

Tensor Tape::gelu(Tensor x) {
  DenseArray out(x->value().shape());
  const auto& xv = x->value().values();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * std_normal_cdf(xv[i]);
  Tensor y = make_node(std::move(out), track({x}));
  if (y->needs_grad) {
    y->backprop = [y, x] {
      const auto& g = y->grad.values();
      const auto& xv = x->value().values();
      auto& gx = grad_of(x).values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gx[i] += g[i] * (std_normal_cdf(xv[i]) + xv[i] * std_normal_pdf(xv[i]));
      }
    };
  }
  return y;
}

Tensor Tape::attention(Tensor qkv, std::size_t heads, AttentionCapture* capture) {
  require_rank(qkv, 2, "attention");
  const std::size_t n = qkv->value().extent(0);
  const std::size_t packed = qkv->value().extent(1);
  if (packed % 3 != 0) throw ContractViolation("attention: qkv width not divisible by 3");
  const std::size_t dim = packed / 3;
  if (heads == 0 || dim % heads != 0) {
    throw ContractViolation("attention: dim " + std::to_string(dim) +
                            " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t hd = dim / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

  DenseArray out({n, dim});
  DenseArray probs({heads, n, n});
  auto qkv_m = as_matrix(qkv->value(), n, packed);
  auto out_m = as_matrix(out, n, dim);
  const auto ei = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  for (std::size_t h = 0; h < heads; ++h) {
    auto q = qkv_m.block(0, ei(h * hd), ei(n), ei(hd));
    auto k = qkv_m.block(0, ei(dim + h * hd), ei(n), ei(hd));
    auto v = qkv_m.block(0, ei(2 * dim + h * hd), ei(n), ei(hd));
    MapM a(probs.data() + h * n * n, ei(n), ei(n));
    a.noalias() = q * k.transpose();
    a *= att_scale;
    for (std::size_t i = 0; i < n; ++i) {
      double* row = probs.data() + h * n * n + i * n;
      double mx = row[0];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        total += row[j];
      }
      const double inv = 1.0 / total;
      for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
    }
    out_m.block(0, ei(h * hd), ei(n), ei(hd)).noalias() = a * v;
  }
  if (capture) {
    capture->score_shapes.push_back({n, n});
    if (capture->keep_probs) capture->probs.push_back(probs);
  }

  Tensor y = make_node(std::move(out), track({qkv}));
  if (y->needs_grad) {
    auto saved = std::make_shared<DenseArray>(std::move(probs));
    y->backprop = [y, qkv, saved, n, dim, heads, hd, att_scale] {
      const auto ei = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
      auto qkv_m = as_matrix(qkv->value(), n, 3 * dim);
      auto gy = as_matrix(y->grad, n, dim);
      auto gqkv = as_matrix(grad_of(qkv), n, 3 * dim);
      RowMat da(ei(n), ei(n));
      for (std::size_t h = 0; h < heads; ++h) {
        auto q = qkv_m.block(0, ei(h * hd), ei(n), ei(hd));
        auto k = qkv_m.block(0, ei(dim + h * hd), ei(n), ei(hd));
        auto v = qkv_m.block(0, ei(2 * dim + h * hd), ei(n), ei(hd));
        CMapM a(saved->data() + h * n * n, ei(n), ei(n));
        auto go = gy.block(0, ei(h * hd), ei(n), ei(hd));

        gqkv.block(0, ei(2 * dim + h * hd), ei(n), ei(hd)).noalias() += a.transpose() * go;

        da.noalias() = go * v.transpose();
        // Softmax backward per row: ds = a ∘ (da - <da, a>).
        for (std::size_t i = 0; i < n; ++i) {
          const double dot = da.row(ei(i)).dot(a.row(ei(i)));
          for (std::size_t j = 0; j < n; ++j) {
            da(ei(i), ei(j)) = a(ei(i), ei(j)) * (da(ei(i), ei(j)) - dot);
          }
        }
        gqkv.block(0, ei(h * hd), ei(n), ei(hd)).noalias() += att_scale * (da * k);
        gqkv.block(0, ei(dim + h * hd), ei(n), ei(hd)).noalias() += att_scale * (da.transpose() * q);
      }
    };
  }
  return y;
}

Tensor Tape::add_positional(Tensor x, Tensor pos_spatial, Tensor pos_temporal) {
  require_rank(x, 2, "add_positional");
  require_rank(pos_spatial, 2, "add_positional");
  require_rank(pos_temporal, 2, "add_positional");
  const std::size_t v = pos_spatial->value().extent(0);
  const std::size_t t = pos_temporal->value().extent(0);
  const std::size_t c = x->value().extent(1);
  if (pos_spatial->value().extent(1) != c || pos_temporal->value().extent(1) != c ||
      x->value().extent(0) != t * v) {
    throw ContractViolation("add_positional: grid/embedding shape mismatch");
  }
  DenseArray out({t * v, c});
  const double* xv = x->value().data();
  const double* ps = pos_spatial->value().data();
  const double* pt = pos_temporal->value().data();
  for (std::size_t ti = 0; ti < t; ++ti)
    for (std::size_t vi = 0; vi < v; ++vi) {
      const std::size_t row = ti * v + vi;
      for (std::size_t j = 0; j < c; ++j)
        out[row * c + j] = xv[row * c + j] + ps[vi * c + j] + pt[ti * c + j];
    }
  Tensor y = make_node(std::move(out), track({x, pos_spatial, pos_temporal}));
  if (y->needs_grad) {
    y->backprop = [y, x, pos_spatial, pos_temporal, t, v, c] {
      const double* g = y->grad.data();
      if (x->needs_grad) {
        auto& gx = grad_of(x).values();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      }
      if (pos_spatial->needs_grad) {
        double* gs = grad_of(pos_spatial).data();
        for (std::size_t ti = 0; ti < t; ++ti)
          for (std::size_t vi = 0; vi < v; ++vi)
            for (std::size_t j = 0; j < c; ++j) gs[vi * c + j] += g[(ti * v + vi) * c + j];
      }
      if (pos_temporal->needs_grad) {
        double* gt = grad_of(pos_temporal).data();
        for (std::size_t ti = 0; ti < t; ++ti)
          for (std::size_t vi = 0; vi < v; ++vi)
            for (std::size_t j = 0; j < c; ++j) gt[ti * c + j] += g[(ti * v + vi) * c + j];
      }
    };
  }
  return y;
}

Tensor Tape::gather_rows(Tensor x, std::vector<std::size_t> rows) {
  require_rank(x, 2, "gather_rows");
  const std::size_t n = x->value().extent(0), d = x->value().extent(1);
  for (std::size_t r : rows) {
    if (r >= n) throw ContractViolation("gather_rows: index out of range");
  }
  DenseArray out({rows.size(), d});
  const double* xv = x->value().data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[rows[i] * d + j];
  Tensor y = make_node(std::move(out), track({x}));
  if (y->needs_grad) {
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(rows));
    y->backprop = [y, x, idx, d] {
      const double* g = y->grad.data();
      double* gx = grad_of(x).data();
      for (std::size_t i = 0; i < idx->size(); ++i)
        for (std::size_t j = 0; j < d; ++j) gx[(*idx)[i] * d + j] += g[i * d + j];
    };
  }
  return y;
}

Tensor Tape::scatter_rows(Tensor x, std::vector<std::size_t> rows,
                          std::size_t total_rows, Tensor fill) {
  require_rank(x, 2, "scatter_rows");
  require_rank(fill, 1, "scatter_rows");
  const std::size_t d = x->value().extent(1);
  if (fill->value().extent(0) != d) {
    throw ContractViolation("scatter_rows: fill width mismatch");
  }
  if (rows.size() != x->value().extent(0)) {
    throw ContractViolation("scatter_rows: row count mismatch (" +
                            std::to_string(rows.size()) + " indices for " +
                            std::to_string(x->value().extent(0)) + " rows)");
  }
  std::vector<bool> placed(total_rows, false);
  for (std::size_t r : rows) {
    if (r >= total_rows || placed[r]) {
      throw ContractViolation("scatter_rows: invalid or duplicate index");
    }
    placed[r] = true;
  }
  DenseArray out({total_rows, d});
  const double* fv = fill->value().data();
  for (std::size_t r = 0; r < total_rows; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = fv[j];
  const double* xv = x->value().data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) out[rows[i] * d + j] = xv[i * d + j];
  Tensor y = make_node(std::move(out), track({x, fill}));
  if (y->needs_grad) {
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(rows));
    auto mask = std::make_shared<std::vector<bool>>(std::move(placed));
    y->backprop = [y, x, fill, idx, mask, total_rows, d] {
      const double* g = y->grad.data();
      if (x->needs_grad) {
        double* gx = grad_of(x).data();
        for (std::size_t i = 0; i < idx->size(); ++i)
          for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[(*idx)[i] * d + j];
      }
      if (fill->needs_grad) {
        double* gf = grad_of(fill).data();
        for (std::size_t r = 0; r < total_rows; ++r) {
          if ((*mask)[r]) continue;
          for (std::size_t j = 0; j < d; ++j) gf[j] += g[r * d + j];
        }
      }
    };
  }
  return y;
}

Tensor Tape::dropout(Tensor x, double rate, RandomStream& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractViolation("dropout: rate must be in [0,1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  DenseArray mask(x->value().shape());
  for (double& m : mask.values()) m = rng.uniform01() < rate ? 0.0 : keep_scale;
  DenseArray out(x->value().shape());
  const auto& xv = x->value().values();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
  Tensor y = make_node(std::move(out), track({x}));
  if (y->needs_grad) {
    auto saved = std::make_shared<DenseArray>(std::move(mask));
    y->backprop = [y, x, saved] {
      const auto& g = y->grad.values();
      auto& gx = grad_of(x).values();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*saved)[i];
    };
  }
  return y;
}

Tensor Tape::masked_sq_error(Tensor pred, const DenseArray& target,
                             const std::vector<std::size_t>& rows) {
  require_rank(pred, 2, "masked_sq_error");
  if (!pred->value().same_shape(target)) {
    throw ContractViolation("masked_sq_error: prediction/target shape mismatch");
  }
  if (rows.empty()) {
    throw ContractViolation("masked_sq_error: empty masked set, loss undefined");
  }
  const std::size_t n = pred->value().extent(0), d = pred->value().extent(1);
  for (std::size_t r : rows) {
    if (r >= n) throw ContractViolation("masked_sq_error: row out of range");
  }
  const double* pv = pred->value().data();
  const double* tv = target.data();
  double total = 0.0;
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = pv[r * d + j] - tv[r * d + j];
      total += diff * diff;
    }
  }
  total /= static_cast<double>(rows.size());
  Tensor y = make_node(DenseArray::scalar(total), track({pred}));
  if (y->needs_grad) {
    auto idx = std::make_shared<std::vector<std::size_t>>(rows);
    auto saved_target = std::make_shared<DenseArray>(target);
    y->backprop = [y, pred, idx, saved_target, d] {
      const double g = y->grad[0];
      const double scale = 2.0 * g / static_cast<double>(idx->size());
      const double* pv = pred->value().data();
      const double* tv = saved_target->data();
      double* gp = grad_of(pred).data();
      for (std::size_t r : *idx) {
        for (std::size_t j = 0; j < d; ++j) {
          gp[r * d + j] += scale * (pv[r * d + j] - tv[r * d + j]);
        }
      }
    };
  }
  return y;
}

Tensor Tape::cross_entropy(Tensor logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t n = logits->value().extent(0), k = logits->value().extent(1);
  if (labels.size() != n) throw ContractViolation("cross_entropy: label count mismatch");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw ContractViolation("cross_entropy: label out of range");
    }
  }
  DenseArray soft({n, k});
  const double* zv = logits->value().data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = zv + i * k;
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      soft[i * k + j] = std::exp(row[j] - mx);
      denom += soft[i * k + j];
    }
    const double inv = 1.0 / denom;
    for (std::size_t j = 0; j < k; ++j) soft[i * k + j] *= inv;
    total += std::log(denom) + mx - row[labels[i]];
  }
  total /= static_cast<double>(n);
  Tensor y = make_node(DenseArray::scalar(total), track({logits}));
  if (y->needs_grad) {
    auto saved_soft = std::make_shared<DenseArray>(std::move(soft));
    auto saved_labels = std::make_shared<std::vector<int>>(labels);
    y->backprop = [y, logits, saved_soft, saved_labels, n, k] {
      const double g = y->grad[0] / static_cast<double>(n);
      double* gz = grad_of(logits).data();
      const double* sv = saved_soft->data();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double onehot = (static_cast<std::size_t>((*saved_labels)[i]) == j) ? 1.0 : 0.0;
          gz[i * k + j] += g * (sv[i * k + j] - onehot);
        }
      }
    };
  }
  return y;
}

Tensor Tape::mean_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw ContractViolation("mean_of: empty input");
  double total = 0.0;
  bool needs = false;
  for (Tensor s : scalars) {
    if (s->value().size() != 1) throw ContractViolation("mean_of: non-scalar input");
    total += s->value()[0];
    needs = needs || s->needs_grad;
  }
  total /= static_cast<double>(scalars.size());
  Tensor y = make_node(DenseArray::scalar(total), recording_ && needs);
  if (y->needs_grad) {
    auto saved = std::make_shared<std::vector<Tensor>>(scalars);
    y->backprop = [y, saved] {
      const double g = y->grad[0] / static_cast<double>(saved->size());
      for (Tensor s : *saved) {
        if (s->needs_grad) grad_of(s)[0] += g;
      }
    };
  }
  return y;
}

Tensor Tape::reshape(Tensor x, std::vector<std::size_t> shape) {
  Tensor y = make_node(x->value().reshaped(std::move(shape)), track({x}));
  if (y->needs_grad) {
    y->backprop = [y, x] {
      const auto& g = y->grad.values();
      auto& gx = grad_of(x).values();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
  }
  return y;
}

void Tape::backward(Tensor loss) {
  if (loss->value().size() != 1) {
    throw ContractViolation("backward: loss must be scalar, got shape " +
                            shape_str(loss->value().shape()));
  }
  grad_of(loss)[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TensorNode* node = it->get();
    if (node->backprop && !node->grad.empty()) node->backprop();
  }
}

}  // namespace mamp
