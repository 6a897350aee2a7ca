#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dart/model.hpp"
#include "dart/rng.hpp"
#include "dart/vocab.hpp"

namespace dart {

struct Corpus {
  std::vector<std::vector<int>> sentences;  // token ids, no [CLS]/[SEP]
};

// Word groups of the seeded sentiment grammar. The few-shot tasks reuse the
// same groups, so pre-training teaches exactly the semantics the tasks probe.
namespace grammar {

const std::vector<std::string>& subjects_media();
const std::vector<std::string>& subjects_food();
const std::vector<std::string>& subjects_nature();
const std::vector<std::string>& subjects_tech();
const std::vector<std::string>& positive_adjectives();
const std::vector<std::string>& negative_adjectives();
const std::vector<std::string>& neutral_adjectives();
const std::vector<std::string>& day_contexts();
const std::vector<std::string>& night_contexts();
// Eight class-summary words: (media|food|nature|tech) x (pos|neg).
const std::vector<std::string>& summary_words();
const std::vector<std::string>& link_verbs();
const std::vector<std::string>& action_verbs();
const std::vector<std::string>& intensifiers();

// Every natural token of the toy language, deterministic order.
std::vector<std::string> natural_tokens();

// HARD task rule: positive iff the subject group matches the context group
// (nature~day, tech~night).
bool interaction_positive(const std::string& subject, const std::string& ctx);

int summary_index(int category, bool positive);  // category: 0..3

}  // namespace grammar

Vocabulary build_sentiment_vocab(int reserved_count = 16);

// Seeded probabilistic grammar over sentiment-like sentences. Mixture of
// polarity statements, subject-context interaction sentences (with the
// polarity consistent with the HARD rule), summary-labelled reviews, and
// neutral filler.
Corpus generate_sentiment_corpus(const Vocabulary& vocab, int n_sentences,
                                 Rng& rng);

struct PretrainConfig {
  int steps = 1500;
  int batch = 16;
  float lr = 1e-3f;
  float mask_prob = 0.15f;
  float weight_decay = 0.01f;
  bool lr_schedule = true;  // warmup/decay; constant lr when false
  uint64_t seed = 17;
  float heldout_frac = 0.1f;
};

struct PretrainHistory {
  std::vector<float> step_loss;
  float heldout_loss_initial = 0.0f;
  float heldout_loss_final = 0.0f;
};

PretrainHistory pretrain(ToyMlmModel& model, const Corpus& corpus,
                         const PretrainConfig& config);

// Average masked-token loss / accuracy over every position of every sentence,
// one mask at a time capped by `max_positions`.
struct MlmEval {
  float loss = 0.0f;
  float accuracy = 0.0f;
};
MlmEval evaluate_mlm(const ToyMlmModel& model,
                     const std::vector<std::vector<int>>& sentences,
                     int max_positions = 256);

}  // namespace dart
