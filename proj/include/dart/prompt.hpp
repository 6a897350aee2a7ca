#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dart/model.hpp"
#include "dart/tensor.hpp"
#include "dart/vocab.hpp"

namespace dart {

// Trainable prompt layout: m template slots plus one [MASK], and n label
// slots (one per class) living in the reserved vocabulary range.
struct PromptSpec {
  int m = 0;  // template length, [MASK] excluded
  int n = 0;  // class count
  std::vector<int> template_slot_ids;  // m reserved ids
  std::vector<int> label_slot_ids;     // n reserved ids
  int mask_index = 0;                  // [MASK] position among template tokens
  std::string layout = "cls_x_sep_t_sep";

  std::vector<int> all_slot_ids() const;
};

struct EncodedPrompt {
  std::vector<int> ids;
  int mask_position = -1;
  int input_begin = 0;  // [input_begin, input_end) spans the X_in tokens
  int input_end = 0;
};

PromptSpec build_prompt_spec(const Vocabulary& vocab, int m, int n,
                             int mask_index);

// [CLS] X_in [SEP] T [SEP]; over-length inputs lose X_in tokens from the
// right, never template tokens.
EncodedPrompt assemble_prompt(std::span<const int> x_in,
                              const PromptSpec& spec,
                              const Vocabulary& vocab, int l_max);

// Seeds the reserved rows: copies of base-token rows when bases are given,
// small normal init otherwise. Touches only the spec's slot rows.
void init_prompt_embeddings(ToyMlmModel& model, const PromptSpec& spec,
                            const std::optional<std::vector<int>>& base_template,
                            const std::optional<std::vector<int>>& base_labels,
                            Rng& rng, float init_std = 0.02f);

// What the training loop actually scores with. For DART the verbalizer sets
// are the reserved label slots; ablations substitute natural token ids.
struct PromptPlan {
  std::vector<int> template_ids;            // tokens around the [MASK]
  int mask_index = 0;
  std::vector<std::vector<int>> label_sets; // per class, usually one id
  std::vector<int> trainable_rows;          // rows optimized in JOINT phase

  int n_classes() const { return int(label_sets.size()); }
  std::vector<int> single_label_ids() const;
};

PromptPlan plan_from_spec(const PromptSpec& spec);

EncodedPrompt assemble_plan(std::span<const int> x_in, const PromptPlan& plan,
                            const Vocabulary& vocab, int l_max);

struct ClassScores {
  TensorPtr probs;         // [n], renormalized over classes, differentiable
  std::vector<float> raw;  // pre-normalization [MASK] probabilities per class
};

// Eq-2-style scoring: softmax over the full vocabulary at the [MASK]
// position, per-class verbalizer mass, then renormalization over classes
// (argmax-preserving).
ClassScores class_scores(Graph& g, const ToyMlmModel& model,
                         const EncodedPrompt& prompt,
                         const std::vector<std::vector<int>>& label_sets);

ClassScores class_scores(Graph& g, const ToyMlmModel& model,
                         const EncodedPrompt& prompt, const PromptSpec& spec);

int predict_class(const ToyMlmModel& model, const EncodedPrompt& prompt,
                  const std::vector<std::vector<int>>& label_sets);

}  // namespace dart
