#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dart {

// Dense row-major float32 tensor. Rank 1 and 2 cover everything the toy
// transformer needs; scalars are shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until gradients are required
  bool requires_grad = false;
  int node_id = -1;

  Tensor() = default;
  Tensor(std::vector<int> s, float fill);

  int64_t numel() const;
  int rows() const;  // rank-1 tensors count as one row
  int cols() const;

  float& at(int r, int c) { return data[size_t(r) * size_t(cols()) + c]; }
  float at(int r, int c) const { return data[size_t(r) * size_t(cols()) + c]; }
  float scalar() const;

  void ensure_grad();
  void zero_grad();
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, float fill = 0.0f);
TensorPtr make_param(std::vector<int> shape, float fill = 0.0f);
TensorPtr tensor_of(std::vector<int> shape, std::vector<float> values,
                    bool requires_grad = false);

bool all_finite(const Tensor& t);

enum class OpKind {
  Leaf,
  MatMul,
  Transpose,
  Add,
  AddRowBroadcast,
  Scale,
  SoftmaxRows,
  LayerNorm,
  EmbeddingGather,
  Gelu,
  Tanh,
  SliceRows,
  SliceCols,
  ConcatCols,
  Pick,
  LogFloor,
  SumAll,
  MeanAll,
  DivByScalar,
  Reshape,
};

const char* op_name(OpKind k);

// Dynamic computation graph, rebuilt per forward pass. Node order is the
// topological order; node k only consumes nodes with smaller ids.
class Graph {
 public:
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr transpose(const TensorPtr& a);
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  // out[r][c] = a[r][c] + row[c]
  TensorPtr add_row_broadcast(const TensorPtr& a, const TensorPtr& row);
  TensorPtr scale(const TensorPtr& a, float factor);
  TensorPtr softmax_rows(const TensorPtr& a);
  TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                       const TensorPtr& bias, float eps);
  TensorPtr embedding_gather(const TensorPtr& table, std::span<const int> ids);
  TensorPtr gelu(const TensorPtr& a);
  TensorPtr tanh_act(const TensorPtr& a);
  TensorPtr slice_rows(const TensorPtr& a, int begin, int count);
  TensorPtr slice_cols(const TensorPtr& a, int begin, int count);
  TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
  // out[i] = a[rc[i].first][rc[i].second]
  TensorPtr pick(const TensorPtr& a,
                 std::span<const std::pair<int, int>> rc);
  TensorPtr log_floor(const TensorPtr& a, float floor = 1e-12f);
  TensorPtr sum_all(const TensorPtr& a);
  TensorPtr mean_all(const TensorPtr& a);
  // v / s with scalar tensor s
  TensorPtr div_by_scalar(const TensorPtr& v, const TensorPtr& s);
  TensorPtr reshape(const TensorPtr& a, std::vector<int> new_shape);

  // Fills grad buffers of every requires_grad tensor reachable from loss.
  // Accumulates when called repeatedly without zeroing.
  void backward(const TensorPtr& loss);

  size_t node_count() const { return nodes_.size(); }
  // Leaf tensors touched by this graph (parameters and constants).
  std::vector<TensorPtr> leaves() const;

 private:
  struct Node {
    OpKind kind;
    std::vector<int> inputs;
    TensorPtr out;
    std::function<void()> grad_fn;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> ids_;

  int id_of(const TensorPtr& t);
  TensorPtr emit(OpKind kind, const std::vector<TensorPtr>& inputs,
                 TensorPtr out, std::function<void()> grad_fn);
};

}  // namespace dart
