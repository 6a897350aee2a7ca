#pragma once

#include <string>
#include <vector>

#include "dart/model.hpp"
#include "dart/objectives.hpp"
#include "dart/prompt.hpp"

namespace dart {

// [MASK]-position hidden states with gold classes, tagged by the training
// step they were captured at.
struct LabeledStates {
  struct Entry {
    int step = 0;
    int label = 0;
    std::vector<float> state;
  };
  int dim = 0;
  std::vector<Entry> entries;
  std::vector<int> captured_steps;
  std::vector<int> skipped_steps;  // requested beyond the training length

  std::vector<std::vector<float>> vectors_at(int step) const;
  std::vector<int> labels_at(int step) const;
};

// Average intra-class distance over average inter-class distance. Each
// class's double sum (i = j terms included) is normalized by N_c^2, each
// ordered class pair's sum by N_c1 * N_c2, the outer sums by C and C(C-1).
double rd_ratio(const std::vector<std::vector<float>>& vectors,
                const std::vector<int>& labels);

// Step hook that records [MASK]-position hidden states of a capture set at
// the listed global steps. Side-effect-free on training.
class MaskStateCapture {
 public:
  MaskStateCapture(std::vector<int> steps, std::vector<Example> capture_set,
                   PromptPlan plan);

  StepHook hook();
  // Finalizes bookkeeping; steps never reached are reported as skipped.
  LabeledStates take(int last_step_trained);

 private:
  std::vector<int> steps_;
  std::vector<Example> capture_set_;
  PromptPlan plan_;
  LabeledStates states_;
};

// Also usable outside training: capture states of the current model once.
void capture_now(const ToyMlmModel& model, const PromptPlan& plan,
                 const std::vector<Example>& data, int step_tag,
                 LabeledStates& out);

struct NeighborReport {
  struct Slot {
    int slot_id = -1;
    bool degenerate = false;  // zero embedding row, similarity undefined
    std::vector<std::pair<int, float>> neighbors;  // (token id, cosine)
  };
  std::vector<Slot> slots;

  std::string to_json(const Vocabulary& vocab) const;
};

// Cosine-similarity search of each label slot row against all natural-token
// rows; top-k descending, ties broken by token id.
NeighborReport nearest_labels(const ToyMlmModel& model,
                              const std::vector<int>& label_slot_ids, int k);

void export_states_csv(const LabeledStates& states, const std::string& path);

}  // namespace dart
