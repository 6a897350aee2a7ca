#include "dart/prompt.hpp"

#include <algorithm>

#include "dart/errors.hpp"

namespace dart {

std::vector<int> PromptSpec::all_slot_ids() const {
  std::vector<int> all = template_slot_ids;
  all.insert(all.end(), label_slot_ids.begin(), label_slot_ids.end());
  return all;
}

PromptSpec build_prompt_spec(const Vocabulary& vocab, int m, int n,
                             int mask_index) {
  if (m < 0) throw ValidationError("template length must be >= 0");
  if (n < 2) throw ValidationError("class count must be >= 2");
  if (mask_index < 0 || mask_index > m) {
    throw ValidationError("mask_index must lie in [0, m]");
  }
  if (vocab.reserved_count() < m + n) {
    throw CapacityError("prompt spec needs " + std::to_string(m + n) +
                        " reserved ids, vocabulary has " +
                        std::to_string(vocab.reserved_count()));
  }
  PromptSpec spec;
  spec.m = m;
  spec.n = n;
  spec.mask_index = mask_index;
  for (int i = 0; i < m; ++i)
    spec.template_slot_ids.push_back(vocab.reserved_begin + i);
  for (int j = 0; j < n; ++j)
    spec.label_slot_ids.push_back(vocab.reserved_begin + m + j);
  return spec;
}

namespace {

EncodedPrompt assemble(std::span<const int> x_in,
                       const std::vector<int>& template_ids, int mask_index,
                       const Vocabulary& vocab, int l_max) {
  const int m = int(template_ids.size());
  if (mask_index < 0 || mask_index > m) {
    throw ValidationError("mask_index outside template");
  }
  // [CLS] + x_in + [SEP] + (m template tokens + [MASK]) + [SEP]
  const int overhead = 3 + m + 1;
  if (overhead > l_max) {
    throw CapacityError("template alone exceeds l_max (needs " +
                        std::to_string(overhead) + " positions)");
  }
  const int budget = l_max - overhead;
  const int keep = std::min(int(x_in.size()), budget);

  EncodedPrompt out;
  out.ids.push_back(vocab.cls_id);
  out.input_begin = 1;
  out.ids.insert(out.ids.end(), x_in.begin(), x_in.begin() + keep);
  out.input_end = int(out.ids.size());
  out.ids.push_back(vocab.sep_id);
  for (int i = 0; i <= m; ++i) {
    if (i == mask_index) {
      out.mask_position = int(out.ids.size());
      out.ids.push_back(vocab.mask_id);
    }
    if (i < m) out.ids.push_back(template_ids[size_t(i)]);
  }
  out.ids.push_back(vocab.sep_id);
  return out;
}

}  // namespace

EncodedPrompt assemble_prompt(std::span<const int> x_in,
                              const PromptSpec& spec, const Vocabulary& vocab,
                              int l_max) {
  return assemble(x_in, spec.template_slot_ids, spec.mask_index, vocab, l_max);
}

void init_prompt_embeddings(ToyMlmModel& model, const PromptSpec& spec,
                            const std::optional<std::vector<int>>& base_template,
                            const std::optional<std::vector<int>>& base_labels,
                            Rng& rng, float init_std) {
  if (base_template && int(base_template->size()) != spec.m) {
    throw ValidationError("base template has " +
                          std::to_string(base_template->size()) +
                          " tokens, spec.m is " + std::to_string(spec.m));
  }
  if (base_labels && int(base_labels->size()) != spec.n) {
    throw ValidationError("base labels have " +
                          std::to_string(base_labels->size()) +
                          " tokens, spec.n is " + std::to_string(spec.n));
  }
  const size_t d = size_t(model.config.d_model);
  auto init_row = [&](int slot, const int* base) {
    if (base) {
      model.set_embedding_row(slot, model.embedding_row(*base));
    } else {
      std::vector<float> row(d, 0.0f);
      for (float& x : row) x = rng.normal_f(0.0f, init_std);
      model.set_embedding_row(slot, row);
    }
  };
  for (int i = 0; i < spec.m; ++i) {
    init_row(spec.template_slot_ids[size_t(i)],
             base_template ? &(*base_template)[size_t(i)] : nullptr);
  }
  for (int j = 0; j < spec.n; ++j) {
    init_row(spec.label_slot_ids[size_t(j)],
             base_labels ? &(*base_labels)[size_t(j)] : nullptr);
  }
}

std::vector<int> PromptPlan::single_label_ids() const {
  std::vector<int> ids;
  for (const auto& set : label_sets) {
    if (set.size() != 1) {
      throw ContractError("plan has a multi-token verbalizer set");
    }
    ids.push_back(set[0]);
  }
  return ids;
}

PromptPlan plan_from_spec(const PromptSpec& spec) {
  PromptPlan plan;
  plan.template_ids = spec.template_slot_ids;
  plan.mask_index = spec.mask_index;
  for (int id : spec.label_slot_ids) plan.label_sets.push_back({id});
  plan.trainable_rows = spec.all_slot_ids();
  return plan;
}

EncodedPrompt assemble_plan(std::span<const int> x_in, const PromptPlan& plan,
                            const Vocabulary& vocab, int l_max) {
  return assemble(x_in, plan.template_ids, plan.mask_index, vocab, l_max);
}

ClassScores class_scores(Graph& g, const ToyMlmModel& model,
                         const EncodedPrompt& prompt,
                         const std::vector<std::vector<int>>& label_sets) {
  if (label_sets.size() < 2) {
    throw ValidationError("class_scores: need at least two classes");
  }
  TensorPtr logits = model.forward_logits(g, prompt.ids);
  TensorPtr mask_row = g.slice_rows(logits, prompt.mask_position, 1);
  TensorPtr vocab_probs = g.softmax_rows(mask_row);

  // One pick per (class, verbalizer token); class mass is the within-set sum.
  std::vector<std::pair<int, int>> rc;
  for (const auto& set : label_sets) {
    if (set.empty()) throw ValidationError("class_scores: empty verbalizer");
    for (int id : set) rc.emplace_back(0, id);
  }
  TensorPtr picked = g.pick(vocab_probs, rc);

  TensorPtr raw;
  bool all_single = true;
  for (const auto& set : label_sets) all_single = all_single && set.size() == 1;
  if (all_single) {
    raw = picked;
  } else {
    // Class mass = within-set sum, done as one constant indicator matmul.
    const int k = int(rc.size());
    const int n = int(label_sets.size());
    auto indicator = make_tensor({k, n});
    int offset = 0;
    for (int j = 0; j < n; ++j) {
      for (size_t i = 0; i < label_sets[size_t(j)].size(); ++i) {
        indicator->at(offset++, j) = 1.0f;
      }
    }
    raw = g.reshape(g.matmul(g.reshape(picked, {1, k}), indicator), {n});
  }

  ClassScores out;
  out.raw.assign(raw->data.begin(), raw->data.end());
  out.probs = g.div_by_scalar(raw, g.sum_all(raw));
  return out;
}

ClassScores class_scores(Graph& g, const ToyMlmModel& model,
                         const EncodedPrompt& prompt, const PromptSpec& spec) {
  std::vector<std::vector<int>> sets;
  for (int id : spec.label_slot_ids) sets.push_back({id});
  return class_scores(g, model, prompt, sets);
}

int predict_class(const ToyMlmModel& model, const EncodedPrompt& prompt,
                  const std::vector<std::vector<int>>& label_sets) {
  Graph g;
  ClassScores scores = class_scores(g, model, prompt, label_sets);
  int best = 0;
  for (int j = 1; j < int(scores.raw.size()); ++j) {
    if (scores.raw[size_t(j)] > scores.raw[size_t(best)]) best = j;
  }
  return best;
}

}  // namespace dart
