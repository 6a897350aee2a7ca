#include "dart/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dart/errors.hpp"

namespace dart {

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os << "phase,epoch,step,train_loss,dev_loss,dev_metric,fluency_loss\n";
  char buf[128];
  for (const auto& r : epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.9g,%.9g,%.9g,%.9g\n", r.phase,
                  r.epoch, r.step, double(r.train_loss), double(r.dev_loss),
                  double(r.dev_metric), double(r.fluency_loss));
    os << buf;
  }
  return os.str();
}

TensorPtr class_discrimination_loss(Graph& g, const TensorPtr& probs,
                                    int gold) {
  if (gold < 0 || gold >= int(probs->numel())) {
    throw IndexError("class_discrimination_loss: gold class " +
                     std::to_string(gold) + " outside " +
                     std::to_string(probs->numel()) + " classes");
  }
  const std::pair<int, int> rc[] = {{0, gold}};
  return g.scale(g.log_floor(g.pick(probs, rc)), -1.0f);
}

FluencySample make_fluency_sample(std::span<const int> x_in, int gold,
                                  const PromptPlan& plan,
                                  const Vocabulary& vocab, int l_max,
                                  Rng& rng) {
  if (gold < 0 || gold >= plan.n_classes()) {
    throw IndexError("make_fluency_sample: gold class out of range");
  }
  EncodedPrompt prompt = assemble_plan(x_in, plan, vocab, l_max);

  // Candidates: natural tokens of the (possibly truncated) input span.
  std::vector<int> candidates;
  for (int p = prompt.input_begin; p < prompt.input_end; ++p) {
    if (vocab.is_natural(prompt.ids[size_t(p)])) candidates.push_back(p);
  }
  if (candidates.empty()) {
    throw ValidationError(
        "make_fluency_sample: input has no natural token to mask");
  }
  const int pos = candidates[size_t(rng.uniform_int(int(candidates.size())))];

  FluencySample sample;
  sample.ids = prompt.ids;
  sample.target_position = pos;
  sample.target_id = sample.ids[size_t(pos)];
  const auto& gold_set = plan.label_sets[size_t(gold)];
  sample.gold_label_id = gold_set.front();
  sample.ids[size_t(pos)] = vocab.mask_id;
  // Golden label instead of [MASK] at the prompt slot.
  sample.ids[size_t(prompt.mask_position)] = sample.gold_label_id;
  return sample;
}

TensorPtr fluency_loss(Graph& g, const ToyMlmModel& model,
                       const FluencySample& sample) {
  TensorPtr logits = model.forward_logits(g, sample.ids);
  const int positions[] = {sample.target_position};
  const int targets[] = {sample.target_id};
  return mlm_loss(g, logits, positions, targets);
}

TensorPtr total_loss(Graph& g, const TensorPtr& lc, const TensorPtr& lf,
                     float lambda) {
  if (lambda < 0.0f) throw ConfigError("total_loss: lambda must be >= 0");
  if (lambda == 0.0f) return lc;
  return g.add(lc, g.scale(lf, lambda));
}

float evaluate_accuracy(const ToyMlmModel& model, const PromptPlan& plan,
                        const std::vector<Example>& data) {
  if (data.empty()) return 0.0f;
  int correct = 0;
  for (const auto& ex : data) {
    EncodedPrompt prompt =
        assemble_plan(ex.x_in, plan, model.vocab, model.config.l_max);
    if (predict_class(model, prompt, plan.label_sets) == ex.label) ++correct;
  }
  return float(correct) / float(data.size());
}

namespace {

struct DevEval {
  float loss = 0.0f;
  float metric = 0.0f;
};

DevEval evaluate_dev(const ToyMlmModel& model, const PromptPlan& plan,
                     const std::vector<Example>& dev) {
  DevEval out;
  if (dev.empty()) return out;
  double loss = 0.0;
  int correct = 0;
  for (const auto& ex : dev) {
    EncodedPrompt prompt =
        assemble_plan(ex.x_in, plan, model.vocab, model.config.l_max);
    Graph g;
    ClassScores scores = class_scores(g, model, prompt, plan.label_sets);
    const float p =
        std::max(scores.probs->data[size_t(ex.label)], 1e-12f);
    loss += -std::log(double(p));
    int best = 0;
    for (int j = 1; j < int(scores.raw.size()); ++j) {
      if (scores.raw[size_t(j)] > scores.raw[size_t(best)]) best = j;
    }
    if (best == ex.label) ++correct;
  }
  out.loss = float(loss / double(dev.size()));
  out.metric = float(correct) / float(dev.size());
  return out;
}

struct PhasePlan {
  int phase = 1;
  float lr = 0.0f;
  int epochs = 0;
};

}  // namespace

TrainResult train_dart(ToyMlmModel& model, const PromptPlan& plan,
                       const std::vector<Example>& train,
                       const std::vector<Example>& dev,
                       const TrainConfig& config, const StepHook& hook) {
  if (train.empty()) throw ValidationError("train_dart: empty training set");
  if (config.lambda < 0.0f) throw ConfigError("lambda must be >= 0");
  if (config.batch < 1) throw ConfigError("batch must be >= 1");
  if (config.grad_accum < 1) throw ConfigError("grad_accum must be >= 1");
  if (plan.n_classes() < 2) throw ValidationError("need at least two classes");

  std::vector<PhasePlan> phases;
  if (config.policy == PhasePolicy::JointThenFull ||
      config.policy == PhasePolicy::JointOnly) {
    if (plan.trainable_rows.empty()) {
      throw ConfigError("joint phase requested but no trainable prompt rows");
    }
    if (config.epochs_joint > 0)
      phases.push_back({1, config.lr_prompt, config.epochs_joint});
  }
  if (config.policy == PhasePolicy::JointThenFull ||
      config.policy == PhasePolicy::FullOnly) {
    if (config.epochs_full > 0)
      phases.push_back({2, config.lr_full, config.epochs_full});
  }
  if (phases.empty()) throw ConfigError("no training phase enabled");

  Rng shuffle_rng = derive_stream(config.seed, "train.shuffle");
  Rng fluency_rng = derive_stream(config.seed, "train.fluency");

  TrainResult result;
  result.best_dev_metric = -1.0f;
  float best_dev_loss = std::numeric_limits<float>::infinity();
  auto best_snapshot = model.snapshot_params();

  const bool use_fluency = config.fluency && config.lambda > 0.0f;
  int global_step = 0;

  for (const PhasePlan& phase : phases) {
    if (phase.phase == 1) {
      model.set_trainable_rows_only(plan.trainable_rows);
    } else {
      model.set_trainable_all();
    }
    const int micro_batches =
        int((train.size() + size_t(config.batch) - 1) / size_t(config.batch));
    const int steps_per_epoch =
        std::max(1, (micro_batches + config.grad_accum - 1) /
                        config.grad_accum);
    AdamWConfig opt_config;
    opt_config.lr = phase.lr;
    opt_config.weight_decay = config.weight_decay;
    opt_config.clip_norm = config.clip_norm;
    opt_config.total_steps = steps_per_epoch * phase.epochs;
    AdamW optimizer(model.registry, opt_config);

    float phase_best_dev_loss = std::numeric_limits<float>::infinity();
    int stale_epochs = 0;

    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < phase.epochs; ++epoch) {
      // Fisher-Yates with the dedicated stream.
      for (size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1],
                  order[size_t(shuffle_rng.uniform_int(int(i)))]);
      }

      double epoch_loss = 0.0, epoch_fluency = 0.0;
      model.registry.zero_grads();
      int accumulated = 0;
      size_t cursor = 0;
      while (cursor < order.size()) {
        const size_t batch_end =
            std::min(order.size(), cursor + size_t(config.batch));
        const float inv = 1.0f / (float(batch_end - cursor) *
                                  float(config.grad_accum));
        for (size_t i = cursor; i < batch_end; ++i) {
          const Example& ex = train[order[i]];
          Graph g;
          TensorPtr loss;
          try {
            EncodedPrompt prompt =
                assemble_plan(ex.x_in, plan, model.vocab, model.config.l_max);
            ClassScores scores =
                class_scores(g, model, prompt, plan.label_sets);
            TensorPtr lc =
                class_discrimination_loss(g, scores.probs, ex.label);
            loss = lc;
            if (use_fluency) {
              FluencySample sample =
                  make_fluency_sample(ex.x_in, ex.label, plan, model.vocab,
                                      model.config.l_max, fluency_rng);
              TensorPtr lf = fluency_loss(g, model, sample);
              epoch_fluency += double(lf->scalar());
              loss = total_loss(g, lc, lf, config.lambda);
            }
          } catch (const NumericError& e) {
            throw NumericError("train_dart: aborted at step " +
                               std::to_string(global_step + 1) + ": " +
                               e.what());
          }
          if (!all_finite(*loss)) {
            throw NumericError("train_dart: non-finite loss at step " +
                               std::to_string(global_step + 1));
          }
          epoch_loss += double(loss->scalar());
          g.backward(g.scale(loss, inv));
          if (phase.phase == 1) model.registry.mask_frozen_grads();
        }
        cursor = batch_end;
        if (++accumulated == config.grad_accum || cursor == order.size()) {
          optimizer.step();
          ++global_step;
          if (phase.phase == 1) {
            ++result.history.steps_joint;
          } else {
            ++result.history.steps_full;
          }
          if (hook) hook(global_step, model);
          model.registry.zero_grads();
          accumulated = 0;
        }
      }

      DevEval dev_eval = evaluate_dev(model, plan, dev);
      EpochRecord record;
      record.phase = phase.phase;
      record.epoch = epoch;
      record.step = global_step;
      record.train_loss = float(epoch_loss / double(train.size()));
      record.fluency_loss =
          use_fluency ? float(epoch_fluency / double(train.size())) : 0.0f;
      record.dev_loss = dev_eval.loss;
      record.dev_metric = dev_eval.metric;
      result.history.epochs.push_back(record);

      if (dev_eval.metric > result.best_dev_metric ||
          (dev_eval.metric == result.best_dev_metric &&
           dev_eval.loss < best_dev_loss)) {
        result.best_dev_metric = dev_eval.metric;
        best_dev_loss = dev_eval.loss;
        best_snapshot = model.snapshot_params();
      }

      if (dev_eval.loss < phase_best_dev_loss - 1e-6f) {
        phase_best_dev_loss = dev_eval.loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= config.patience) {
        break;
      }
    }
  }

  model.restore_params(best_snapshot);
  model.set_trainable_all();
  return result;
}

}  // namespace dart
