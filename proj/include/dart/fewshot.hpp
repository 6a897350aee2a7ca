#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dart/analysis.hpp"
#include "dart/model.hpp"
#include "dart/objectives.hpp"
#include "dart/prompt.hpp"

namespace dart {

// A synthetic benchmark task drawn from the sentiment grammar. `pool` feeds
// the K-shot sampler; `test` is only ever read through EpisodeDataset.
struct Task {
  std::string name;
  int n_classes = 2;
  std::vector<std::string> class_names;
  std::vector<Example> pool;
  std::vector<Example> test;
  std::vector<int> base_template_ids;  // natural tokens of the base prompt
  int base_mask_index = 0;
  std::vector<int> base_label_ids;  // one natural label word per class
  std::string metric = "accuracy";  // or "micro_f1"
};

// name: "easy" (polarity word decides), "hard" (subject-context interaction),
// "many" (8 composite classes).
Task build_task(const Vocabulary& vocab, const std::string& name,
                uint64_t seed);

struct EpisodeDataset {
  int k = 0;
  uint64_t seed = 0;
  std::vector<Example> train, dev;
  const Task* task = nullptr;
  mutable int test_reads = 0;

  // The only sanctioned route to the test set; counts accesses.
  const std::vector<Example>& test_set() const {
    ++test_reads;
    return task->test;
  }
  uint64_t split_checksum() const;
};

EpisodeDataset sample_k_shot(const Task& task, int k, uint64_t seed);

float accuracy_metric(const std::vector<int>& preds,
                      const std::vector<int>& golds);
float micro_f1_metric(const std::vector<int>& preds,
                      const std::vector<int>& golds, int n_classes);

// Hyperparameter grid; Cartesian product enumerated in deterministic order.
struct GridSpace {
  std::vector<float> lr_full = {1e-3f};
  std::vector<float> lr_prompt = {3e-2f};
  std::vector<float> weight_decay = {0.01f};
  std::vector<float> lambda = {1.0f};
  std::vector<int> batch = {8};
  std::vector<int> epochs = {0};  // 0 keeps the method defaults

  struct Point {
    float lr_full, lr_prompt, weight_decay, lambda;
    int batch, epochs;
    std::string to_json() const;
  };
  std::vector<Point> enumerate() const;
};

enum class MethodKind { Dart, HeadFt, FixedPrompt };

struct MethodSpec {
  MethodKind kind = MethodKind::Dart;
  bool fluency = true;
  bool diff_template = true;  // Dart only
  bool diff_label = true;     // Dart only

  std::string tag() const;
};

struct ClassifierHead {
  TensorPtr w1, b1, w2, b2;
};

ClassifierHead make_classifier_head(int d_model, int n_classes, Rng& rng);

// One trained run of any method, ready to be evaluated.
struct TrainedMethod {
  MethodKind kind = MethodKind::Dart;
  ToyMlmModel model;
  PromptPlan plan;      // prompt methods
  ClassifierHead head;  // head method
  TrainHistory history;
  float dev_metric = 0.0f;

  float evaluate(const std::vector<Example>& data,
                 const std::string& metric) const;
};

// Defaults shared by every run; grid points override the swept fields.
struct ProtocolConfig {
  TrainConfig train;
  std::vector<int> capture_steps;  // optional state capture (prompt methods)
};

TrainedMethod run_single(const ToyMlmModel& pretrained, const Task& task,
                         const EpisodeDataset& episode,
                         const MethodSpec& method, const GridSpace::Point& hp,
                         const ProtocolConfig& config,
                         LabeledStates* captured = nullptr);

struct GridSearchResult {
  GridSpace::Point best;
  float best_dev_metric = 0.0f;
  TrainedMethod best_run;
};

// Trains one run per grid point, keeps the best dev metric (ties: first in
// enumeration order). The test set is never touched.
GridSearchResult grid_search(const ToyMlmModel& pretrained, const Task& task,
                             const EpisodeDataset& episode,
                             const MethodSpec& method, const GridSpace& grid,
                             const ProtocolConfig& config);

struct SeedResult {
  uint64_t seed = 0;
  float dev_metric = 0.0f;
  float test_metric = 0.0f;
  GridSpace::Point chosen;
  int test_reads = 0;
  uint64_t split_checksum = 0;
};

struct RunReport {
  std::string method;
  std::string task;
  int k = 0;
  std::vector<SeedResult> per_seed;
  double mean = 0.0;
  double stddev = 0.0;  // population

  void finalize();
  std::string to_csv_rows() const;
  static std::string csv_header();
};

RunReport run_protocol(const ToyMlmModel& pretrained, const Task& task, int k,
                       const std::vector<uint64_t>& seeds,
                       const MethodSpec& method, const GridSpace& grid,
                       const ProtocolConfig& config);

// Four arms over identical splits: full DART, -fluency, -differentiable
// template, -differentiable label.
std::vector<RunReport> run_ablation_suite(const ToyMlmModel& pretrained,
                                          const Task& task, int k,
                                          const std::vector<uint64_t>& seeds,
                                          const GridSpace& grid,
                                          const ProtocolConfig& config);

std::string aggregate_reports_json(const std::vector<RunReport>& reports);

}  // namespace dart
