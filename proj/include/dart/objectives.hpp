#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dart/model.hpp"
#include "dart/prompt.hpp"

namespace dart {

struct Example {
  std::vector<int> x_in;  // natural token ids
  int label = 0;
};

enum class PhasePolicy { JointThenFull, JointOnly, FullOnly };

struct TrainConfig {
  float lambda = 1.0f;  // fluency weight
  int epochs_joint = 24;
  int epochs_full = 12;
  int batch = 8;
  float lr_prompt = 3e-2f;
  float lr_full = 1e-3f;
  float weight_decay = 0.01f;
  PhasePolicy policy = PhasePolicy::JointThenFull;
  bool fluency = true;
  uint64_t seed = 0;
  int grad_accum = 1;
  int patience = 6;
  float clip_norm = 1.0f;
};

struct EpochRecord {
  int phase = 1;  // 1 = joint (prompt rows only), 2 = full
  int epoch = 0;
  int step = 0;  // global optimizer steps completed
  float train_loss = 0.0f;
  float dev_loss = 0.0f;
  float dev_metric = 0.0f;
  float fluency_loss = 0.0f;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int steps_joint = 0;
  int steps_full = 0;

  std::string to_csv() const;
};

struct TrainResult {
  TrainHistory history;
  float best_dev_metric = 0.0f;
};

// -log p(gold) on a class probability vector.
TensorPtr class_discrimination_loss(Graph& g, const TensorPtr& probs,
                                    int gold);

// Fluency constraint input: one natural input token masked out, the prompt's
// [MASK] slot filled with the gold class's label token, so the only [MASK]
// left is the fluency one.
struct FluencySample {
  std::vector<int> ids;
  int target_position = -1;
  int target_id = -1;
  int gold_label_id = -1;
};

FluencySample make_fluency_sample(std::span<const int> x_in, int gold,
                                  const PromptPlan& plan,
                                  const Vocabulary& vocab, int l_max,
                                  Rng& rng);

// -log h(x^m | x', y): masked-token prediction conditioned on the gold label.
TensorPtr fluency_loss(Graph& g, const ToyMlmModel& model,
                       const FluencySample& sample);

// L = L_C + lambda * L_F; lambda == 0 returns L_C itself (bitwise).
TensorPtr total_loss(Graph& g, const TensorPtr& lc, const TensorPtr& lf,
                     float lambda);

using StepHook = std::function<void(int step, const ToyMlmModel&)>;

// Joint template+label optimization, then optional full fine-tuning. The
// model is left holding the best-dev parameters.
TrainResult train_dart(ToyMlmModel& model, const PromptPlan& plan,
                       const std::vector<Example>& train,
                       const std::vector<Example>& dev,
                       const TrainConfig& config,
                       const StepHook& hook = nullptr);

float evaluate_accuracy(const ToyMlmModel& model, const PromptPlan& plan,
                        const std::vector<Example>& data);

}  // namespace dart
