#include "dart/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dart/errors.hpp"

namespace dart {

namespace {

int64_t product(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void require_rank2(const Tensor& t, const char* who) {
  if (t.shape.size() != 2) {
    throw ShapeError(std::string(who) + ": expected rank-2 tensor, got " +
                     shape_str(t.shape));
  }
}

// c = 0.7978845608 (sqrt(2/pi)), a = 0.044715: tanh approximation of GELU.
inline float gelu_fwd(float x) {
  const float c = 0.79788456080286535588f;
  const float a = 0.044715f;
  const float u = c * (x + a * x * x * x);
  return 0.5f * x * (1.0f + std::tanh(u));
}

inline float gelu_bwd(float x) {
  const float c = 0.79788456080286535588f;
  const float a = 0.044715f;
  const float u = c * (x + a * x * x * x);
  const float t = std::tanh(u);
  const float du = c * (1.0f + 3.0f * a * x * x);
  return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
}

}  // namespace

Tensor::Tensor(std::vector<int> s, float fill) : shape(std::move(s)) {
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_str(shape));
  }
  data.assign(size_t(product(shape)), fill);
}

int64_t Tensor::numel() const { return product(shape); }

int Tensor::rows() const {
  if (shape.size() == 2) return shape[0];
  return 1;
}

int Tensor::cols() const {
  if (shape.empty()) return 0;
  return shape.back();
}

float Tensor::scalar() const {
  if (numel() != 1) {
    throw ContractError("scalar() on tensor of shape " + shape_str(shape));
  }
  return data[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
}

void Tensor::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0f);
}

TensorPtr make_tensor(std::vector<int> shape, float fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

TensorPtr make_param(std::vector<int> shape, float fill) {
  auto t = std::make_shared<Tensor>(std::move(shape), fill);
  t->requires_grad = true;
  t->ensure_grad();
  return t;
}

TensorPtr tensor_of(std::vector<int> shape, std::vector<float> values,
                    bool requires_grad) {
  auto t = std::make_shared<Tensor>(std::move(shape), 0.0f);
  if (int64_t(values.size()) != t->numel()) {
    throw ShapeError("tensor_of: value count " + std::to_string(values.size()) +
                     " does not fill shape " + shape_str(t->shape));
  }
  t->data = std::move(values);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

bool all_finite(const Tensor& t) {
  for (float v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::AddRowBroadcast: return "add_row_broadcast";
    case OpKind::Scale: return "scale";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::LayerNorm: return "layer_norm";
    case OpKind::EmbeddingGather: return "embedding_gather";
    case OpKind::Gelu: return "gelu";
    case OpKind::Tanh: return "tanh";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::Pick: return "pick";
    case OpKind::LogFloor: return "log_floor";
    case OpKind::SumAll: return "sum_all";
    case OpKind::MeanAll: return "mean_all";
    case OpKind::DivByScalar: return "div_by_scalar";
    case OpKind::Reshape: return "reshape";
  }
  return "?";
}

int Graph::id_of(const TensorPtr& t) {
  auto it = ids_.find(t.get());
  if (it != ids_.end()) return it->second;
  int id = int(nodes_.size());
  ids_.emplace(t.get(), id);
  nodes_.push_back(Node{OpKind::Leaf, {}, t, nullptr});
  return id;
}

TensorPtr Graph::emit(OpKind kind, const std::vector<TensorPtr>& inputs,
                      TensorPtr out, std::function<void()> grad_fn) {
  std::vector<int> in_ids;
  in_ids.reserve(inputs.size());
  bool needs_grad = false;
  for (const auto& in : inputs) {
    in_ids.push_back(id_of(in));
    needs_grad = needs_grad || in->requires_grad;
  }
  out->requires_grad = needs_grad;
  if (needs_grad) out->ensure_grad();
  int id = int(nodes_.size());
  out->node_id = id;
  ids_.emplace(out.get(), id);
  nodes_.push_back(Node{kind, std::move(in_ids), out,
                        needs_grad ? std::move(grad_fn) : nullptr});
  return nodes_.back().out;
}

TensorPtr Graph::matmul(const TensorPtr& a, const TensorPtr& b) {
  require_rank2(*a, "matmul lhs");
  require_rank2(*b, "matmul rhs");
  if (a->shape[1] != b->shape[0]) {
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_str(a->shape) + " x " + shape_str(b->shape));
  }
  const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = make_tensor({m, n});
  const float* pa = a->data.data();
  const float* pb = b->data.data();
  float* pc = out->data.data();
  for (int i = 0; i < m; ++i) {
    float* crow = pc + size_t(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const float av = pa[size_t(i) * k + kk];
      const float* brow = pb + size_t(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return emit(OpKind::MatMul, {a, b}, out, [a, b, out, m, k, n] {
    const float* g = out->grad.data();
    if (a->requires_grad) {
      // dA = dC * B^T
      float* ga = a->grad.data();
      const float* pb = b->data.data();
      for (int i = 0; i < m; ++i) {
        for (int kk = 0; kk < k; ++kk) {
          float acc = 0.0f;
          const float* grow = g + size_t(i) * n;
          const float* brow = pb + size_t(kk) * n;
          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[size_t(i) * k + kk] += acc;
        }
      }
    }
    if (b->requires_grad) {
      // dB = A^T * dC
      float* gb = b->grad.data();
      const float* pa = a->data.data();
      for (int i = 0; i < m; ++i) {
        const float* grow = g + size_t(i) * n;
        for (int kk = 0; kk < k; ++kk) {
          const float av = pa[size_t(i) * k + kk];
          float* gbrow = gb + size_t(kk) * n;
          for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

TensorPtr Graph::transpose(const TensorPtr& a) {
  require_rank2(*a, "transpose");
  const int r = a->shape[0], c = a->shape[1];
  auto out = make_tensor({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out->at(j, i) = a->at(i, j);
  return emit(OpKind::Transpose, {a}, out, [a, out, r, c] {
    if (!a->requires_grad) return;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        a->grad[size_t(i) * c + j] += out->grad[size_t(j) * r + i];
  });
}

TensorPtr Graph::add(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw ShapeError("add: shapes disagree, " + shape_str(a->shape) + " vs " +
                     shape_str(b->shape));
  }
  auto out = make_tensor(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] + b->data[i];
  return emit(OpKind::Add, {a, b}, out, [a, b, out] {
    if (a->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
    if (b->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) b->grad[i] += out->grad[i];
  });
}

TensorPtr Graph::add_row_broadcast(const TensorPtr& a, const TensorPtr& row) {
  const int r = a->rows(), c = a->cols();
  if (int(row->numel()) != c) {
    throw ShapeError("add_row_broadcast: row length " +
                     std::to_string(row->numel()) + " vs " +
                     std::to_string(c) + " columns");
  }
  auto out = make_tensor(a->shape);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out->data[size_t(i) * c + j] = a->data[size_t(i) * c + j] + row->data[j];
  return emit(OpKind::AddRowBroadcast, {a, row}, out, [a, row, out, r, c] {
    if (a->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
    if (row->requires_grad) {
      for (int j = 0; j < c; ++j) {
        float acc = 0.0f;
        for (int i = 0; i < r; ++i) acc += out->grad[size_t(i) * c + j];
        row->grad[j] += acc;
      }
    }
  });
}

TensorPtr Graph::scale(const TensorPtr& a, float factor) {
  auto out = make_tensor(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = a->data[i] * factor;
  return emit(OpKind::Scale, {a}, out, [a, out, factor] {
    if (!a->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i)
      a->grad[i] += out->grad[i] * factor;
  });
}

TensorPtr Graph::softmax_rows(const TensorPtr& a) {
  const int r = a->rows(), c = a->cols();
  if (c < 1) throw ShapeError("softmax_rows: empty last dimension");
  if (!all_finite(*a)) throw NumericError("softmax_rows: non-finite input");
  auto out = make_tensor(a->shape);
  for (int i = 0; i < r; ++i) {
    const float* x = a->data.data() + size_t(i) * c;
    float* y = out->data.data() + size_t(i) * c;
    float mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    // Normalizer in double: keeps row sums at 1 to well below 1e-6 even for
    // wide vocabulary rows. Storage stays float32.
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += double(y[j]);
    }
    const float inv = float(1.0 / z);
    for (int j = 0; j < c; ++j) y[j] *= inv;
  }
  return emit(OpKind::SoftmaxRows, {a}, out, [a, out, r, c] {
    if (!a->requires_grad) return;
    for (int i = 0; i < r; ++i) {
      const float* s = out->data.data() + size_t(i) * c;
      const float* g = out->grad.data() + size_t(i) * c;
      float* gx = a->grad.data() + size_t(i) * c;
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += double(g[j]) * double(s[j]);
      for (int j = 0; j < c; ++j)
        gx[j] += s[j] * (g[j] - float(dot));
    }
  });
}

TensorPtr Graph::layer_norm(const TensorPtr& x, const TensorPtr& gain,
                            const TensorPtr& bias, float eps) {
  if (eps <= 0.0f) throw ConfigError("layer_norm: eps must be positive");
  const int r = x->rows(), c = x->cols();
  if (int(gain->numel()) != c || int(bias->numel()) != c) {
    throw ShapeError("layer_norm: gain/bias must have length " +
                     std::to_string(c));
  }
  auto out = make_tensor(x->shape);
  // Stash per-row stats for backward.
  auto stats = std::make_shared<std::vector<float>>(size_t(r) * 2);
  for (int i = 0; i < r; ++i) {
    const float* xr = x->data.data() + size_t(i) * c;
    float* yr = out->data.data() + size_t(i) * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += xr[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= c;
    const float inv_std = float(1.0 / std::sqrt(var + double(eps)));
    (*stats)[size_t(i) * 2] = float(mean);
    (*stats)[size_t(i) * 2 + 1] = inv_std;
    for (int j = 0; j < c; ++j) {
      const float xhat = (xr[j] - float(mean)) * inv_std;
      yr[j] = gain->data[j] * xhat + bias->data[j];
    }
  }
  return emit(OpKind::LayerNorm, {x, gain, bias}, out,
              [x, gain, bias, out, stats, r, c] {
    for (int i = 0; i < r; ++i) {
      const float mean = (*stats)[size_t(i) * 2];
      const float inv_std = (*stats)[size_t(i) * 2 + 1];
      const float* xr = x->data.data() + size_t(i) * c;
      const float* g = out->grad.data() + size_t(i) * c;
      if (gain->requires_grad || bias->requires_grad) {
        for (int j = 0; j < c; ++j) {
          const float xhat = (xr[j] - mean) * inv_std;
          if (gain->requires_grad) gain->grad[j] += g[j] * xhat;
          if (bias->requires_grad) bias->grad[j] += g[j];
        }
      }
      if (x->requires_grad) {
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int j = 0; j < c; ++j) {
          const float gy = g[j] * gain->data[j];
          const float xhat = (xr[j] - mean) * inv_std;
          sum_gy += gy;
          sum_gy_xhat += double(gy) * xhat;
        }
        const float mg = float(sum_gy / c);
        const float mgx = float(sum_gy_xhat / c);
        float* gx = x->grad.data() + size_t(i) * c;
        for (int j = 0; j < c; ++j) {
          const float gy = g[j] * gain->data[j];
          const float xhat = (xr[j] - mean) * inv_std;
          gx[j] += (gy - mg - xhat * mgx) * inv_std;
        }
      }
    }
  });
}

TensorPtr Graph::embedding_gather(const TensorPtr& table,
                                  std::span<const int> ids) {
  require_rank2(*table, "embedding_gather");
  const int v = table->shape[0], d = table->shape[1];
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw IndexError("embedding_gather: id " + std::to_string(id) +
                       " outside table of " + std::to_string(v) + " rows");
    }
  }
  auto idx = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  auto out = make_tensor({int(ids.size()), d});
  for (size_t i = 0; i < idx->size(); ++i) {
    const float* src = table->data.data() + size_t((*idx)[i]) * d;
    std::copy(src, src + d, out->data.data() + i * size_t(d));
  }
  return emit(OpKind::EmbeddingGather, {table}, out, [table, out, idx, d] {
    if (!table->requires_grad) return;
    for (size_t i = 0; i < idx->size(); ++i) {
      float* dst = table->grad.data() + size_t((*idx)[i]) * d;
      const float* g = out->grad.data() + i * size_t(d);
      for (int j = 0; j < d; ++j) dst[j] += g[j];
    }
  });
}

TensorPtr Graph::gelu(const TensorPtr& a) {
  auto out = make_tensor(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = gelu_fwd(a->data[i]);
  return emit(OpKind::Gelu, {a}, out, [a, out] {
    if (!a->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i)
      a->grad[i] += out->grad[i] * gelu_bwd(a->data[i]);
  });
}

TensorPtr Graph::tanh_act(const TensorPtr& a) {
  auto out = make_tensor(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = std::tanh(a->data[i]);
  return emit(OpKind::Tanh, {a}, out, [a, out] {
    if (!a->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i) {
      const float y = out->data[i];
      a->grad[i] += out->grad[i] * (1.0f - y * y);
    }
  });
}

TensorPtr Graph::slice_rows(const TensorPtr& a, int begin, int count) {
  require_rank2(*a, "slice_rows");
  const int r = a->shape[0], c = a->shape[1];
  if (begin < 0 || count < 0 || begin + count > r) {
    throw IndexError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     std::to_string(r) + " rows");
  }
  auto out = make_tensor({count, c});
  std::copy(a->data.begin() + size_t(begin) * c,
            a->data.begin() + size_t(begin + count) * c, out->data.begin());
  return emit(OpKind::SliceRows, {a}, out, [a, out, begin, count, c] {
    if (!a->requires_grad) return;
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < c; ++j)
        a->grad[size_t(begin + i) * c + j] += out->grad[size_t(i) * c + j];
  });
}

TensorPtr Graph::slice_cols(const TensorPtr& a, int begin, int count) {
  require_rank2(*a, "slice_cols");
  const int r = a->shape[0], c = a->shape[1];
  if (begin < 0 || count < 0 || begin + count > c) {
    throw IndexError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     std::to_string(c) + " cols");
  }
  auto out = make_tensor({r, count});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < count; ++j)
      out->at(i, j) = a->at(i, begin + j);
  return emit(OpKind::SliceCols, {a}, out, [a, out, begin, count, r, c] {
    if (!a->requires_grad) return;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < count; ++j)
        a->grad[size_t(i) * c + begin + j] += out->grad[size_t(i) * count + j];
  });
}

TensorPtr Graph::concat_cols(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int r = parts[0]->rows();
  int total = 0;
  for (const auto& p : parts) {
    require_rank2(*p, "concat_cols");
    if (p->shape[0] != r) throw ShapeError("concat_cols: row counts disagree");
    total += p->shape[1];
  }
  auto out = make_tensor({r, total});
  int off = 0;
  for (const auto& p : parts) {
    const int c = p->shape[1];
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out->at(i, off + j) = p->at(i, j);
    off += c;
  }
  return emit(OpKind::ConcatCols, parts, out, [parts, out, r, total] {
    int off = 0;
    for (const auto& p : parts) {
      const int c = p->shape[1];
      if (p->requires_grad) {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            p->grad[size_t(i) * c + j] += out->grad[size_t(i) * total + off + j];
      }
      off += c;
    }
  });
}

TensorPtr Graph::pick(const TensorPtr& a,
                      std::span<const std::pair<int, int>> rc) {
  const int r = a->rows(), c = a->cols();
  for (const auto& [i, j] : rc) {
    if (i < 0 || i >= r || j < 0 || j >= c) {
      throw IndexError("pick: (" + std::to_string(i) + "," + std::to_string(j) +
                       ") outside " + std::to_string(r) + "x" +
                       std::to_string(c));
    }
  }
  auto idx = std::make_shared<std::vector<std::pair<int, int>>>(rc.begin(),
                                                                rc.end());
  auto out = make_tensor({int(rc.size())});
  for (size_t i = 0; i < idx->size(); ++i)
    out->data[i] = a->at((*idx)[i].first, (*idx)[i].second);
  return emit(OpKind::Pick, {a}, out, [a, out, idx, c] {
    if (!a->requires_grad) return;
    for (size_t i = 0; i < idx->size(); ++i)
      a->grad[size_t((*idx)[i].first) * c + (*idx)[i].second] += out->grad[i];
  });
}

TensorPtr Graph::log_floor(const TensorPtr& a, float floor) {
  auto out = make_tensor(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = std::log(std::max(a->data[i], floor));
  return emit(OpKind::LogFloor, {a}, out, [a, out, floor] {
    if (!a->requires_grad) return;
    // The clamped region is flat: zero gradient there.
    for (size_t i = 0; i < out->grad.size(); ++i) {
      if (a->data[i] > floor) a->grad[i] += out->grad[i] / a->data[i];
    }
  });
}

TensorPtr Graph::sum_all(const TensorPtr& a) {
  auto out = make_tensor({1});
  double acc = 0.0;
  for (float v : a->data) acc += v;
  out->data[0] = float(acc);
  return emit(OpKind::SumAll, {a}, out, [a, out] {
    if (!a->requires_grad) return;
    const float g = out->grad[0];
    for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
  });
}

TensorPtr Graph::mean_all(const TensorPtr& a) {
  if (a->numel() == 0) throw ShapeError("mean_all: empty tensor");
  auto out = make_tensor({1});
  double acc = 0.0;
  for (float v : a->data) acc += v;
  out->data[0] = float(acc / double(a->numel()));
  return emit(OpKind::MeanAll, {a}, out, [a, out] {
    if (!a->requires_grad) return;
    const float g = out->grad[0] / float(a->numel());
    for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
  });
}

TensorPtr Graph::div_by_scalar(const TensorPtr& v, const TensorPtr& s) {
  if (s->numel() != 1) throw ShapeError("div_by_scalar: divisor not scalar");
  auto out = make_tensor(v->shape);
  const float sv = s->data[0];
  for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = v->data[i] / sv;
  return emit(OpKind::DivByScalar, {v, s}, out, [v, s, out] {
    const float sv = s->data[0];
    if (v->requires_grad) {
      for (size_t i = 0; i < out->grad.size(); ++i)
        v->grad[i] += out->grad[i] / sv;
    }
    if (s->requires_grad) {
      double acc = 0.0;
      for (size_t i = 0; i < out->grad.size(); ++i)
        acc += double(out->grad[i]) * v->data[i];
      s->grad[0] += float(-acc / (double(sv) * sv));
    }
  });
}

TensorPtr Graph::reshape(const TensorPtr& a, std::vector<int> new_shape) {
  auto out = make_tensor(std::move(new_shape));
  if (out->numel() != a->numel()) {
    throw ShapeError("reshape: element count changes from " +
                     std::to_string(a->numel()) + " to " +
                     std::to_string(out->numel()));
  }
  out->data = a->data;
  return emit(OpKind::Reshape, {a}, out, [a, out] {
    if (!a->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
  });
}

std::vector<TensorPtr> Graph::leaves() const {
  std::vector<TensorPtr> out;
  for (const auto& n : nodes_) {
    if (n.kind == OpKind::Leaf) out.push_back(n.out);
  }
  return out;
}

void Graph::backward(const TensorPtr& loss) {
  if (loss->numel() != 1) {
    throw ContractError("backward: loss must be scalar, got " +
                        std::to_string(loss->numel()) + " elements");
  }
  auto it = ids_.find(loss.get());
  if (it == ids_.end()) {
    throw ContractError("backward: loss tensor does not belong to this graph");
  }
  // Intermediates reset per call; leaf gradients accumulate across calls.
  for (int i = it->second; i >= 0; --i) {
    const Node& n = nodes_[size_t(i)];
    if (n.kind != OpKind::Leaf && n.out->requires_grad) n.out->zero_grad();
  }
  loss->ensure_grad();
  loss->grad[0] += 1.0f;
  for (int i = it->second; i >= 0; --i) {
    const Node& n = nodes_[size_t(i)];
    if (n.grad_fn && n.out->requires_grad) n.grad_fn();
  }
}

}  // namespace dart
