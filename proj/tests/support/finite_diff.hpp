#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dart/tensor.hpp"

namespace testsupport {

// Central-difference gradient oracle, independent of the backward pass. The
// loss closure must recompute the full forward from current tensor contents.
inline std::vector<float> finite_diff_grad(dart::Tensor& x,
                                           const std::function<float()>& loss,
                                           float h = 1e-3f) {
  std::vector<float> grad(x.data.size());
  for (size_t i = 0; i < x.data.size(); ++i) {
    const float keep = x.data[i];
    x.data[i] = keep + h;
    const float up = loss();
    x.data[i] = keep - h;
    const float down = loss();
    x.data[i] = keep;
    grad[i] = (up - down) / (2.0f * h);
  }
  return grad;
}

inline float rel_err(float a, float b) {
  return std::fabs(a - b) / std::max({1.0f, std::fabs(a), std::fabs(b)});
}

inline float max_rel_err(const std::vector<float>& a,
                         const std::vector<float>& b) {
  float worst = 0.0f;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

// Scalar projection with fixed weights, so gradient checks see a non-uniform
// upstream gradient: loss = sum_i w_i * t_i.
inline dart::TensorPtr weighted_sum(dart::Graph& g, const dart::TensorPtr& t,
                                    const std::vector<float>& weights) {
  const int n = int(t->numel());
  auto w = dart::tensor_of({n, 1}, std::vector<float>(weights));
  return g.reshape(g.matmul(g.reshape(t, {1, n}), w), {1});
}

inline std::vector<float> ramp_weights(size_t n) {
  std::vector<float> w(n);
  for (size_t i = 0; i < n; ++i) {
    w[i] = 0.25f + 0.5f * float(i % 7) - 0.3f * float(i % 3);
  }
  return w;
}

}  // namespace testsupport
