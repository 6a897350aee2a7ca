#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dart/tensor.hpp"

namespace dart {

// One named parameter. `trainable_rows`, when non-empty, restricts updates
// (and gradients) to those rows of a rank-2 tensor; used in the prompt-only
// phase where only reserved embedding rows move.
struct ParamEntry {
  std::string name;
  TensorPtr tensor;
  bool trainable = true;
  bool decay_exempt = false;
  std::vector<int> trainable_rows;
};

class ParamRegistry {
 public:
  void add(std::string name, TensorPtr t, bool decay_exempt = false);
  ParamEntry& find(std::string_view name);
  const ParamEntry& find(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  void zero_grads();
  void set_all_trainable(bool trainable);
  // Zeroes gradients of frozen rows / frozen tensors so a registry scan sees
  // exact zeros outside the trainable set.
  void mask_frozen_grads();

  // FNV-1a over the raw float bytes of every parameter.
  uint64_t checksum() const;
  // Same, but skipping the given rows of one named rank-2 parameter.
  uint64_t checksum_excluding_rows(std::string_view name,
                                   const std::vector<int>& rows) const;

  int64_t total_params() const;

 private:
  std::vector<ParamEntry> entries_;
};

struct AdamWConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.0f;
  // total_steps > 0 enables linear warmup over the first warmup_frac of
  // updates followed by linear decay to zero.
  int total_steps = 0;
  float warmup_frac = 0.1f;
  float clip_norm = 1.0f;
};

// Decoupled weight decay AdamW with global-norm gradient clipping and the
// warmup/decay schedule. Only trainable registry entries are touched.
class AdamW {
 public:
  AdamW(ParamRegistry& registry, AdamWConfig config);

  // Applies one update from the gradients currently in the registry.
  void step();

  int step_count() const { return step_; }
  float last_lr() const { return last_lr_; }
  float last_grad_norm() const { return last_grad_norm_; }
  const AdamWConfig& config() const { return config_; }

  float schedule_factor(int step) const;

 private:
  ParamRegistry& registry_;
  AdamWConfig config_;
  int step_ = 0;
  float last_lr_ = 0.0f;
  float last_grad_norm_ = 0.0f;
  std::vector<std::vector<float>> m_, v_;
};

// Scales trainable gradients so their global L2 norm does not exceed
// max_norm. Returns the pre-clip norm.
float clip_global_grad_norm(ParamRegistry& registry, float max_norm);

}  // namespace dart
