#include "dart/optim.hpp"

#include <algorithm>
#include <cmath>

#include "dart/errors.hpp"
#include "dart/rng.hpp"

namespace dart {

void ParamRegistry::add(std::string name, TensorPtr t, bool decay_exempt) {
  for (const auto& e : entries_) {
    if (e.name == name) {
      throw ValidationError("parameter registered twice: " + name);
    }
    if (e.tensor.get() == t.get()) {
      throw ValidationError("tensor registered under two names: " + e.name +
                            " and " + name);
    }
  }
  t->requires_grad = true;
  t->ensure_grad();
  entries_.push_back(ParamEntry{std::move(name), std::move(t), true,
                                decay_exempt, {}});
}

ParamEntry& ParamRegistry::find(std::string_view name) {
  for (auto& e : entries_)
    if (e.name == name) return e;
  throw ValidationError("unknown parameter: " + std::string(name));
}

const ParamEntry& ParamRegistry::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw ValidationError("unknown parameter: " + std::string(name));
}

bool ParamRegistry::contains(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

void ParamRegistry::zero_grads() {
  for (auto& e : entries_) e.tensor->zero_grad();
}

void ParamRegistry::set_all_trainable(bool trainable) {
  for (auto& e : entries_) {
    e.trainable = trainable;
    e.trainable_rows.clear();
    // Frozen tensors take no gradients at all, so a registry scan after
    // backward sees exact zeros outside the trainable set.
    e.tensor->requires_grad = trainable;
    e.tensor->ensure_grad();
  }
}

void ParamRegistry::mask_frozen_grads() {
  for (auto& e : entries_) {
    Tensor& t = *e.tensor;
    if (t.grad.empty()) continue;
    if (!e.trainable) {
      t.zero_grad();
      continue;
    }
    if (!e.trainable_rows.empty()) {
      const int c = t.cols();
      std::vector<char> keep(size_t(t.rows()), 0);
      for (int r : e.trainable_rows) keep[size_t(r)] = 1;
      for (int r = 0; r < t.rows(); ++r) {
        if (!keep[size_t(r)]) {
          std::fill(t.grad.begin() + size_t(r) * c,
                    t.grad.begin() + size_t(r + 1) * c, 0.0f);
        }
      }
    }
  }
}

namespace {

void fnv_mix(uint64_t& h, const float* p, size_t n) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(p);
  for (size_t i = 0; i < n * sizeof(float); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

uint64_t ParamRegistry::checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : entries_) fnv_mix(h, e.tensor->data.data(),
                                         e.tensor->data.size());
  return h;
}

uint64_t ParamRegistry::checksum_excluding_rows(
    std::string_view name, const std::vector<int>& rows) const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : entries_) {
    const Tensor& t = *e.tensor;
    if (e.name == name) {
      const int c = t.cols();
      for (int r = 0; r < t.rows(); ++r) {
        if (std::find(rows.begin(), rows.end(), r) != rows.end()) continue;
        fnv_mix(h, t.data.data() + size_t(r) * c, size_t(c));
      }
    } else {
      fnv_mix(h, t.data.data(), t.data.size());
    }
  }
  return h;
}

int64_t ParamRegistry::total_params() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor->numel();
  return n;
}

float clip_global_grad_norm(ParamRegistry& registry, float max_norm) {
  registry.mask_frozen_grads();
  double sq = 0.0;
  for (const auto& e : registry.entries()) {
    if (!e.trainable) continue;
    for (float g : e.tensor->grad) sq += double(g) * g;
  }
  const float norm = float(std::sqrt(sq));
  if (norm > max_norm && norm > 0.0f) {
    const float f = max_norm / norm;
    for (auto& e : registry.entries()) {
      if (!e.trainable) continue;
      for (float& g : e.tensor->grad) g *= f;
    }
  }
  return norm;
}

AdamW::AdamW(ParamRegistry& registry, AdamWConfig config)
    : registry_(registry), config_(config) {
  m_.reserve(registry.entries().size());
  v_.reserve(registry.entries().size());
  for (const auto& e : registry.entries()) {
    m_.emplace_back(e.tensor->data.size(), 0.0f);
    v_.emplace_back(e.tensor->data.size(), 0.0f);
  }
}

float AdamW::schedule_factor(int step) const {
  if (config_.total_steps <= 0) return 1.0f;
  const int total = config_.total_steps;
  const int warmup = std::max(1, int(config_.warmup_frac * float(total)));
  if (step <= warmup) return float(step) / float(warmup);
  if (step >= total) return 0.0f;
  return float(total - step) / float(total - warmup);
}

void AdamW::step() {
  for (const auto& e : registry_.entries()) {
    if (e.trainable && e.tensor->grad.size() != e.tensor->data.size()) {
      throw ContractError("adamw: trainable parameter '" + e.name +
                          "' has no gradient");
    }
  }
  if (config_.clip_norm > 0.0f) {
    last_grad_norm_ = clip_global_grad_norm(registry_, config_.clip_norm);
  } else {
    registry_.mask_frozen_grads();
  }

  ++step_;
  const float lr = config_.lr * schedule_factor(step_);
  last_lr_ = lr;
  const float bc1 = 1.0f - std::pow(config_.beta1, float(step_));
  const float bc2 = 1.0f - std::pow(config_.beta2, float(step_));

  for (size_t pi = 0; pi < registry_.entries().size(); ++pi) {
    ParamEntry& e = registry_.entries()[pi];
    if (!e.trainable) continue;
    Tensor& t = *e.tensor;
    auto& m = m_[pi];
    auto& v = v_[pi];

    auto update_range = [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        if (!e.decay_exempt && config_.weight_decay > 0.0f) {
          t.data[i] -= lr * config_.weight_decay * t.data[i];
        }
        const float g = t.grad[i];
        m[i] = config_.beta1 * m[i] + (1.0f - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0f - config_.beta2) * g * g;
        const float mhat = m[i] / bc1;
        const float vhat = v[i] / bc2;
        t.data[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    };

    if (e.trainable_rows.empty()) {
      update_range(0, t.data.size());
    } else {
      const size_t c = size_t(t.cols());
      for (int r : e.trainable_rows) update_range(size_t(r) * c, size_t(r + 1) * c);
    }
  }
}

}  // namespace dart
