#include <doctest.h>

#include <cmath>

#include "dart/errors.hpp"
#include "dart/objectives.hpp"
#include "dart/prompt.hpp"
#include "support/finite_diff.hpp"

using namespace dart;

namespace {

std::vector<std::string> letters(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::string(1, char('a' + i)));
  return out;
}

ToyMlmModel tiny_model(const Vocabulary& vocab, uint64_t seed = 3) {
  ModelConfig config;
  config.d_model = 16;
  config.n_layers = 1;
  config.n_heads = 4;
  config.l_max = 24;
  Rng rng(seed);
  return ToyMlmModel::init(config, vocab, rng);
}

// Independent scoring oracle: forward logits, softmax the [MASK] row in
// double precision, read the verbalizer probabilities directly.
std::vector<double> direct_mask_probs(const ToyMlmModel& model,
                                      const EncodedPrompt& prompt,
                                      const std::vector<int>& token_ids) {
  Graph g;
  auto logits = model.forward_logits(g, prompt.ids);
  const int v = model.config.vocab_size;
  std::vector<double> row(static_cast<size_t>(v), 0.0);
  double mx = -1e300;
  for (int j = 0; j < v; ++j) {
    row[size_t(j)] = double(logits->at(prompt.mask_position, j));
    mx = std::max(mx, row[size_t(j)]);
  }
  double z = 0;
  for (double& x : row) {
    x = std::exp(x - mx);
    z += x;
  }
  std::vector<double> out;
  for (int id : token_ids) out.push_back(row[size_t(id)] / z);
  return out;
}

}  // namespace

TEST_CASE("build_prompt_spec assigns reserved ids deterministically") {
  Vocabulary v = build_vocab(letters(10), 8);  // reserved [14, 22)
  PromptSpec spec = build_prompt_spec(v, 3, 2, 3);
  CHECK(spec.template_slot_ids == std::vector<int>{14, 15, 16});
  CHECK(spec.label_slot_ids == std::vector<int>{17, 18});

  PromptSpec bare = build_prompt_spec(v, 0, 2, 0);
  CHECK(bare.template_slot_ids.empty());
  CHECK(bare.label_slot_ids == std::vector<int>{14, 15});

  CHECK_THROWS_WITH_AS(build_prompt_spec(v, 7, 2, 0),
                       doctest::Contains("9"), CapacityError);
  CHECK_THROWS_AS(build_prompt_spec(v, 3, 1, 0), ValidationError);
  CHECK_THROWS_AS(build_prompt_spec(v, 3, 2, 4), ValidationError);
}

TEST_CASE("assemble_prompt layout and truncation policy") {
  Vocabulary v = build_vocab(letters(10), 8);
  PromptSpec spec = build_prompt_spec(v, 2, 2, 2);  // [MASK] after both slots

  const std::vector<int> x_in = {5, 6};
  EncodedPrompt p = assemble_prompt(x_in, spec, v, 24);
  CHECK(p.ids == std::vector<int>{v.cls_id, 5, 6, v.sep_id, 14, 15, v.mask_id,
                                  v.sep_id});
  CHECK(p.mask_position == 6);
  CHECK(p.ids[size_t(p.mask_position)] == v.mask_id);
  CHECK(p.input_begin == 1);
  CHECK(p.input_end == 3);

  PromptSpec bare = build_prompt_spec(v, 0, 2, 0);
  EncodedPrompt q = assemble_prompt(x_in, bare, v, 24);
  CHECK(q.ids == std::vector<int>{v.cls_id, 5, 6, v.sep_id, v.mask_id,
                                  v.sep_id});

  // Over-length input: X_in is cut from the right, template survives, and
  // exactly one [MASK] remains.
  std::vector<int> longer(30, 5);
  EncodedPrompt t = assemble_prompt(longer, spec, v, 12);
  CHECK(int(t.ids.size()) == 12);
  int masks = 0;
  for (int id : t.ids) masks += id == v.mask_id;
  CHECK(masks == 1);
  CHECK(t.ids[size_t(t.ids.size()) - 4] == 14);
  CHECK(t.ids[size_t(t.ids.size()) - 3] == 15);
  CHECK(t.input_end - t.input_begin == 12 - 6);
}

TEST_CASE("init_prompt_embeddings: copy bases, random fallback, determinism") {
  Vocabulary v = build_vocab(letters(10), 8);
  PromptSpec spec = build_prompt_spec(v, 3, 2, 3);

  ToyMlmModel model = tiny_model(v);
  const std::vector<int> base_template = {4, 5, 6};
  const std::vector<int> base_labels = {7, 8};
  Rng rng(1);
  init_prompt_embeddings(model, spec, base_template, base_labels, rng);
  for (int i = 0; i < 3; ++i) {
    CHECK(model.embedding_row(spec.template_slot_ids[size_t(i)]) ==
          model.embedding_row(base_template[size_t(i)]));
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(model.embedding_row(spec.label_slot_ids[size_t(j)]) ==
          model.embedding_row(base_labels[size_t(j)]));
  }

  // Random init: slot rows move, all other rows stay untouched, and the
  // average norm sits near sigma * sqrt(d).
  ToyMlmModel m2 = tiny_model(v, 5);
  std::vector<std::vector<float>> untouched;
  for (int id = 0; id < v.size(); ++id) untouched.push_back(m2.embedding_row(id));
  Rng r2(2);
  init_prompt_embeddings(m2, spec, std::nullopt, std::nullopt, r2);
  double norm_sum = 0;
  for (int slot : spec.all_slot_ids()) {
    double sq = 0;
    for (float x : m2.embedding_row(slot)) sq += double(x) * x;
    norm_sum += std::sqrt(sq);
  }
  const double mean_norm = norm_sum / 5.0;
  const double expected = 0.02 * std::sqrt(16.0);
  CHECK(mean_norm > 0.4 * expected);
  CHECK(mean_norm < 2.0 * expected);
  for (int id = 0; id < v.size(); ++id) {
    if (std::find(spec.template_slot_ids.begin(), spec.template_slot_ids.end(),
                  id) != spec.template_slot_ids.end())
      continue;
    if (std::find(spec.label_slot_ids.begin(), spec.label_slot_ids.end(), id) !=
        spec.label_slot_ids.end())
      continue;
    CHECK(m2.embedding_row(id) == untouched[size_t(id)]);
  }

  // Same seed, same init.
  ToyMlmModel m3 = tiny_model(v, 5);
  Rng r3(2);
  init_prompt_embeddings(m3, spec, std::nullopt, std::nullopt, r3);
  for (int slot : spec.all_slot_ids()) {
    CHECK(m3.embedding_row(slot) == m2.embedding_row(slot));
  }

  CHECK_THROWS_AS(init_prompt_embeddings(model, spec, std::vector<int>{4},
                                         base_labels, rng),
                  ValidationError);
}

TEST_CASE("class_scores: proper distribution, Eq.-2 degenerate equivalence") {
  Vocabulary v = build_vocab(letters(10), 8);
  ToyMlmModel model = tiny_model(v);
  PromptSpec spec = build_prompt_spec(v, 3, 2, 3);
  Rng rng(4);
  init_prompt_embeddings(model, spec, std::nullopt, std::nullopt, rng);

  const std::vector<int> x_in = {4, 5, 6};
  EncodedPrompt prompt = assemble_prompt(x_in, spec, v, 24);
  Graph g;
  ClassScores scores = class_scores(g, model, prompt, spec);
  REQUIRE(scores.probs->numel() == 2);
  CHECK(std::fabs(scores.probs->data[0] + scores.probs->data[1] - 1.0f) <
        1e-6f);

  // Single-token verbalizers: the pre-normalization score IS the token's
  // [MASK]-position softmax probability.
  const auto direct = direct_mask_probs(model, prompt, spec.label_slot_ids);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::fabs(double(scores.raw[size_t(j)]) - direct[size_t(j)]) < 1e-7);
  }
}

TEST_CASE("swapping label rows swaps the two class probabilities") {
  Vocabulary v = build_vocab(letters(10), 8);
  ToyMlmModel model = tiny_model(v);
  PromptSpec spec = build_prompt_spec(v, 2, 2, 2);
  Rng rng(4);
  init_prompt_embeddings(model, spec, std::nullopt, std::nullopt, rng);
  const std::vector<int> x_in = {4, 5};
  EncodedPrompt prompt = assemble_prompt(x_in, spec, v, 24);

  Graph g1;
  ClassScores before = class_scores(g1, model, prompt, spec);

  const auto row0 = model.embedding_row(spec.label_slot_ids[0]);
  const auto row1 = model.embedding_row(spec.label_slot_ids[1]);
  model.set_embedding_row(spec.label_slot_ids[0], row1);
  model.set_embedding_row(spec.label_slot_ids[1], row0);
  // Decoder bias must match too for an exact swap.
  std::swap(model.decoder_bias->data[size_t(spec.label_slot_ids[0])],
            model.decoder_bias->data[size_t(spec.label_slot_ids[1])]);

  Graph g2;
  ClassScores after = class_scores(g2, model, prompt, spec);
  CHECK(std::fabs(before.probs->data[0] - after.probs->data[1]) < 1e-6f);
  CHECK(std::fabs(before.probs->data[1] - after.probs->data[0]) < 1e-6f);
}

TEST_CASE("relabeling symmetry: slot identity does not matter, contents do") {
  Vocabulary v = build_vocab(letters(10), 8);
  ToyMlmModel base = tiny_model(v);
  Rng rng(4);

  PromptSpec spec_a = build_prompt_spec(v, 2, 2, 2);
  ToyMlmModel m1 = base.clone();
  init_prompt_embeddings(m1, spec_a, std::nullopt, std::nullopt, rng);

  // Different reserved ids, same embedding contents.
  PromptSpec spec_b = spec_a;
  spec_b.template_slot_ids = {18, 19};
  spec_b.label_slot_ids = {20, 21};
  ToyMlmModel m2 = base.clone();
  for (int i = 0; i < 2; ++i) {
    m2.set_embedding_row(spec_b.template_slot_ids[size_t(i)],
                         m1.embedding_row(spec_a.template_slot_ids[size_t(i)]));
    m2.set_embedding_row(spec_b.label_slot_ids[size_t(i)],
                         m1.embedding_row(spec_a.label_slot_ids[size_t(i)]));
    m2.decoder_bias->data[size_t(spec_b.label_slot_ids[size_t(i)])] =
        m1.decoder_bias->data[size_t(spec_a.label_slot_ids[size_t(i)])];
  }

  const std::vector<int> x_in = {4, 5, 6};
  EncodedPrompt p1 = assemble_prompt(x_in, spec_a, v, 24);
  EncodedPrompt p2 = assemble_prompt(x_in, spec_b, v, 24);
  Graph g1, g2;
  ClassScores s1 = class_scores(g1, m1, p1, spec_a);
  ClassScores s2 = class_scores(g2, m2, p2, spec_b);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::fabs(s1.probs->data[size_t(j)] - s2.probs->data[size_t(j)]) <
          1e-6f);
  }
}

TEST_CASE("renormalization never changes the argmax") {
  Vocabulary v = build_vocab(letters(10), 8);
  ToyMlmModel model = tiny_model(v);
  PromptSpec spec = build_prompt_spec(v, 1, 3, 1);
  Rng rng(6);
  init_prompt_embeddings(model, spec, std::nullopt, std::nullopt, rng);

  for (int trial = 0; trial < 8; ++trial) {
    std::vector<int> x_in = {4 + trial % 5, 5 + trial % 4};
    EncodedPrompt prompt = assemble_prompt(x_in, spec, v, 24);
    Graph g;
    ClassScores scores = class_scores(g, model, prompt, spec);
    int argmax_raw = 0, argmax_norm = 0;
    for (int j = 1; j < 3; ++j) {
      if (scores.raw[size_t(j)] > scores.raw[size_t(argmax_raw)])
        argmax_raw = j;
      if (scores.probs->data[size_t(j)] >
          scores.probs->data[size_t(argmax_norm)])
        argmax_norm = j;
    }
    CHECK(argmax_raw == argmax_norm);
  }
}

TEST_CASE("multi-token verbalizers score by summation") {
  Vocabulary v = build_vocab(letters(10), 8);
  ToyMlmModel model = tiny_model(v);
  PromptSpec spec = build_prompt_spec(v, 1, 2, 1);
  const std::vector<int> x_in = {4, 5};
  EncodedPrompt prompt = assemble_prompt(x_in, spec, v, 24);

  const std::vector<std::vector<int>> sets = {{6, 7}, {8}};
  Graph g;
  ClassScores scores = class_scores(g, model, prompt, sets);
  const auto direct = direct_mask_probs(model, prompt, {6, 7, 8});
  CHECK(std::fabs(double(scores.raw[0]) - (direct[0] + direct[1])) < 1e-7);
  CHECK(std::fabs(double(scores.raw[1]) - direct[2]) < 1e-7);
}

TEST_CASE("prompt-only phase: gradients exactly zero off the reserved rows") {
  Vocabulary v = build_vocab(letters(10), 8);
  ToyMlmModel model = tiny_model(v);
  PromptSpec spec = build_prompt_spec(v, 3, 2, 3);
  Rng rng(4);
  init_prompt_embeddings(model, spec, std::nullopt, std::nullopt, rng);

  const auto slots = spec.all_slot_ids();
  model.set_trainable_rows_only(slots);
  model.registry.zero_grads();

  PromptPlan plan = plan_from_spec(spec);
  const std::vector<int> x_in = {4, 5, 6};
  EncodedPrompt prompt = assemble_prompt(x_in, spec, v, 24);
  Graph g;
  ClassScores scores = class_scores(g, model, prompt, spec);
  TensorPtr lc = class_discrimination_loss(g, scores.probs, 1);
  Rng frng(8);
  FluencySample sample = make_fluency_sample(std::vector<int>{4, 5, 6}, 1,
                                             plan, v, 24, frng);
  TensorPtr lf = fluency_loss(g, model, sample);
  g.backward(total_loss(g, lc, lf, 1.0f));
  model.registry.mask_frozen_grads();

  int nonzero_slot_rows = 0;
  for (const auto& e : model.registry.entries()) {
    const Tensor& t = *e.tensor;
    if (e.name == "embedding") {
      const int d = t.cols();
      for (int r = 0; r < t.rows(); ++r) {
        bool nonzero = false;
        for (int c = 0; c < d; ++c) {
          nonzero = nonzero || t.grad[size_t(r) * d + c] != 0.0f;
        }
        const bool is_slot =
            std::find(slots.begin(), slots.end(), r) != slots.end();
        if (!is_slot) {
          CHECK(!nonzero);
        } else if (nonzero) {
          ++nonzero_slot_rows;
        }
      }
    } else {
      for (float gv : t.grad) CHECK(gv == 0.0f);
    }
  }
  // The loss actually reaches the prompt rows.
  CHECK(nonzero_slot_rows >= 4);
}
