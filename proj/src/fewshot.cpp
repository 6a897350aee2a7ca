#include "dart/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dart/corpus.hpp"
#include "dart/errors.hpp"

namespace dart {

namespace {

using grammar::action_verbs;
using grammar::day_contexts;
using grammar::intensifiers;
using grammar::link_verbs;
using grammar::negative_adjectives;
using grammar::night_contexts;
using grammar::positive_adjectives;
using grammar::subjects_food;
using grammar::subjects_media;
using grammar::subjects_nature;
using grammar::subjects_tech;
using grammar::summary_words;

const std::vector<std::string>& category_subjects(int cat) {
  switch (cat) {
    case 0: return subjects_media();
    case 1: return subjects_food();
    case 2: return subjects_nature();
    default: return subjects_tech();
  }
}

std::string choice(const std::vector<std::string>& words, Rng& rng) {
  return words[size_t(rng.uniform_int(int(words.size())))];
}

// Draws labelled sentences until each class has its quota, unique by surface
// form so train/dev/test never share an example.
std::vector<Example> draw_unique(
    const Vocabulary& vocab, int n_classes, int per_class, Rng& rng,
    const std::function<std::pair<std::string, int>(Rng&)>& gen,
    std::set<std::string>& used) {
  std::vector<int> counts(size_t(n_classes), 0);
  std::vector<Example> out;
  int attempts = 0;
  while (int(out.size()) < n_classes * per_class) {
    if (++attempts > n_classes * per_class * 1000) {
      throw CapacityError("task generator ran out of unique sentences");
    }
    auto [text, label] = gen(rng);
    if (counts[size_t(label)] >= per_class) continue;
    if (!used.insert(text).second) continue;
    ++counts[size_t(label)];
    out.push_back(Example{encode(vocab, text), label});
  }
  return out;
}

}  // namespace

Task build_task(const Vocabulary& vocab, const std::string& name,
                uint64_t seed) {
  Task task;
  task.name = name;
  Rng rng = derive_stream(seed, "task." + name);
  std::set<std::string> used;

  auto template_ids = [&vocab](std::initializer_list<const char*> words) {
    std::vector<int> ids;
    for (const char* w : words) ids.push_back(vocab.id_of(w));
    return ids;
  };

  if (name == "easy") {
    task.n_classes = 2;
    task.class_names = {"negative", "positive"};
    task.base_template_ids = template_ids({"it", "was", "."});
    task.base_mask_index = 2;
    task.base_label_ids = {vocab.id_of("terrible"), vocab.id_of("great")};
    auto gen = [](Rng& r) {
      const bool positive = r.bernoulli(0.5);
      const auto& adjs =
          positive ? positive_adjectives() : negative_adjectives();
      static const std::vector<std::string> tails = {"today", "again",
                                                     "always", "never"};
      std::string text = "the " + choice(category_subjects(r.uniform_int(4)), r) +
                         " " + choice(link_verbs(), r) + " " + choice(adjs, r);
      if (r.bernoulli(0.5)) text += " " + choice(tails, r);
      return std::make_pair(text, positive ? 1 : 0);
    };
    task.test = draw_unique(vocab, 2, 100, rng, gen, used);
    task.pool = draw_unique(vocab, 2, 80, rng, gen, used);
  } else if (name == "hard") {
    task.n_classes = 2;
    task.class_names = {"negative", "positive"};
    task.base_template_ids = template_ids({"it", "was", "."});
    task.base_mask_index = 2;
    task.base_label_ids = {vocab.id_of("terrible"), vocab.id_of("great")};
    auto gen = [](Rng& r) {
      const bool nature = r.bernoulli(0.5);
      const auto& subjects = nature ? subjects_nature() : subjects_tech();
      const std::string subject = choice(subjects, r);
      const bool day = r.bernoulli(0.5);
      const std::string ctx =
          day ? choice(day_contexts(), r) : choice(night_contexts(), r);
      std::string text =
          "the " + subject + " " + choice(action_verbs(), r) + " at " + ctx;
      return std::make_pair(text,
                            grammar::interaction_positive(subject, ctx) ? 1
                                                                        : 0);
    };
    task.test = draw_unique(vocab, 2, 100, rng, gen, used);
    task.pool = draw_unique(vocab, 2, 80, rng, gen, used);
  } else if (name == "many") {
    task.n_classes = 8;
    task.metric = "micro_f1";
    task.base_template_ids = template_ids({"in", "short", "."});
    task.base_mask_index = 2;
    static const char* kCat[] = {"media", "food", "nature", "tech"};
    for (int cat = 0; cat < 4; ++cat) {
      for (int pol = 0; pol < 2; ++pol) {
        task.class_names.push_back(std::string(kCat[cat]) +
                                   (pol == 0 ? "_pos" : "_neg"));
      }
    }
    for (const auto& w : summary_words()) {
      task.base_label_ids.push_back(vocab.id_of(w));
    }
    auto gen = [](Rng& r) {
      const int cat = r.uniform_int(4);
      const bool positive = r.bernoulli(0.5);
      const auto& adjs =
          positive ? positive_adjectives() : negative_adjectives();
      std::string text = "the " + choice(category_subjects(cat), r) + " " +
                         choice(link_verbs(), r) + " " + choice(adjs, r);
      return std::make_pair(text, grammar::summary_index(cat, positive));
    };
    task.test = draw_unique(vocab, 8, 24, rng, gen, used);
    task.pool = draw_unique(vocab, 8, 72, rng, gen, used);
  } else {
    throw ConfigError("unknown task: " + name +
                      " (expected easy, hard, or many)");
  }
  return task;
}

EpisodeDataset sample_k_shot(const Task& task, int k, uint64_t seed) {
  if (k < 1) throw ValidationError("k must be >= 1");
  EpisodeDataset episode;
  episode.k = k;
  episode.seed = seed;
  episode.task = &task;

  for (int c = 0; c < task.n_classes; ++c) {
    std::vector<size_t> indices;
    for (size_t i = 0; i < task.pool.size(); ++i) {
      if (task.pool[i].label == c) indices.push_back(i);
    }
    if (int(indices.size()) < 2 * k) {
      throw CapacityError("class " + std::to_string(c) + " has " +
                          std::to_string(indices.size()) +
                          " pool examples, needs " + std::to_string(2 * k));
    }
    Rng rng = derive_stream(seed, "episode.class", uint64_t(c));
    for (size_t i = indices.size(); i > 1; --i) {
      std::swap(indices[i - 1], indices[size_t(rng.uniform_int(int(i)))]);
    }
    for (int i = 0; i < k; ++i)
      episode.train.push_back(task.pool[indices[size_t(i)]]);
    for (int i = k; i < 2 * k; ++i)
      episode.dev.push_back(task.pool[indices[size_t(i)]]);
  }
  return episode;
}

uint64_t EpisodeDataset::split_checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_int = [&h](int v) {
    for (int b = 0; b < 4; ++b) {
      h ^= uint64_t((v >> (8 * b)) & 0xff);
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* part : {&train, &dev}) {
    for (const auto& ex : *part) {
      mix_int(ex.label);
      mix_int(int(ex.x_in.size()));
      for (int id : ex.x_in) mix_int(id);
    }
  }
  return h;
}

float accuracy_metric(const std::vector<int>& preds,
                      const std::vector<int>& golds) {
  if (preds.size() != golds.size() || preds.empty()) {
    throw ValidationError("accuracy: size mismatch or empty");
  }
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++correct;
  return float(correct) / float(preds.size());
}

float micro_f1_metric(const std::vector<int>& preds,
                      const std::vector<int>& golds, int n_classes) {
  if (preds.size() != golds.size() || preds.empty()) {
    throw ValidationError("micro_f1: size mismatch or empty");
  }
  int64_t tp = 0, fp = 0, fn = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == c, g = golds[i] == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  if (tp == 0) return 0.0f;
  return float(2.0 * double(tp) / (2.0 * double(tp) + double(fp) + double(fn)));
}

std::string GridSpace::Point::to_json() const {
  nlohmann::json j{{"lr_full", lr_full},     {"lr_prompt", lr_prompt},
                   {"weight_decay", weight_decay}, {"lambda", lambda},
                   {"batch", batch},         {"epochs", epochs}};
  return j.dump();
}

std::vector<GridSpace::Point> GridSpace::enumerate() const {
  auto check = [](bool ok, const char* axis) {
    if (!ok) throw ConfigError(std::string("empty grid axis: ") + axis);
  };
  check(!lr_full.empty(), "lr_full");
  check(!lr_prompt.empty(), "lr_prompt");
  check(!weight_decay.empty(), "weight_decay");
  check(!lambda.empty(), "lambda");
  check(!batch.empty(), "batch");
  check(!epochs.empty(), "epochs");
  std::vector<Point> points;
  for (float lf : lr_full)
    for (float lp : lr_prompt)
      for (float wd : weight_decay)
        for (float lm : lambda)
          for (int b : batch)
            for (int ep : epochs)
              points.push_back(Point{lf, lp, wd, lm, b, ep});
  return points;
}

std::string MethodSpec::tag() const {
  switch (kind) {
    case MethodKind::HeadFt: return "head";
    case MethodKind::FixedPrompt: return "fixed_prompt";
    case MethodKind::Dart: {
      std::string t = "dart";
      if (!fluency) t += "_no_fluency";
      if (!diff_template) t += "_fixed_template";
      if (!diff_label) t += "_fixed_label";
      return t;
    }
  }
  return "?";
}

ClassifierHead make_classifier_head(int d_model, int n_classes, Rng& rng) {
  ClassifierHead head;
  const float s = 1.0f / std::sqrt(float(d_model));
  head.w1 = make_tensor({d_model, d_model});
  for (float& v : head.w1->data) v = rng.normal_f(0.0f, s);
  head.b1 = make_tensor({d_model});
  head.w2 = make_tensor({d_model, n_classes});
  for (float& v : head.w2->data) v = rng.normal_f(0.0f, s);
  head.b2 = make_tensor({n_classes});
  return head;
}

namespace {

TensorPtr head_logits(Graph& g, const ToyMlmModel& model,
                      const ClassifierHead& head, std::span<const int> ids) {
  ForwardResult fwd = model.forward_states(g, ids);
  TensorPtr cls = g.slice_rows(fwd.hidden, 0, 1);
  TensorPtr hid = g.tanh_act(
      g.add_row_broadcast(g.matmul(cls, head.w1), head.b1));
  return g.add_row_broadcast(g.matmul(hid, head.w2), head.b2);
}

std::vector<int> with_cls_sep(const Vocabulary& vocab,
                              std::span<const int> x_in, int l_max) {
  std::vector<int> ids;
  const int keep = std::min(int(x_in.size()), l_max - 2);
  ids.push_back(vocab.cls_id);
  ids.insert(ids.end(), x_in.begin(), x_in.begin() + keep);
  ids.push_back(vocab.sep_id);
  return ids;
}

int head_predict(const ToyMlmModel& model, const ClassifierHead& head,
                 const Example& ex) {
  Graph g;
  TensorPtr logits = head_logits(
      g, model, head, with_cls_sep(model.vocab, ex.x_in, model.config.l_max));
  int best = 0;
  for (int j = 1; j < logits->cols(); ++j) {
    if (logits->data[size_t(j)] > logits->data[size_t(best)]) best = j;
  }
  return best;
}

// Conventional baseline: fresh MLP head over [CLS], full fine-tuning.
TrainedMethod train_head_method(const ToyMlmModel& pretrained,
                                const Task& task,
                                const EpisodeDataset& episode,
                                const GridSpace::Point& hp,
                                const TrainConfig& defaults) {
  TrainedMethod out;
  out.kind = MethodKind::HeadFt;
  out.model = pretrained.clone();
  ToyMlmModel& model = out.model;

  Rng init_rng = derive_stream(defaults.seed, "head.init");
  out.head = make_classifier_head(model.config.d_model, task.n_classes,
                                  init_rng);

  ParamRegistry params = model.registry;  // shared tensors, private flags
  params.add("head.w1", out.head.w1);
  params.add("head.b1", out.head.b1, true);
  params.add("head.w2", out.head.w2);
  params.add("head.b2", out.head.b2, true);
  params.set_all_trainable(true);

  const int epochs = hp.epochs > 0 ? hp.epochs : defaults.epochs_full;
  const int batch = hp.batch;
  const int micro_batches =
      int((episode.train.size() + size_t(batch) - 1) / size_t(batch));
  AdamWConfig opt_config;
  opt_config.lr = hp.lr_full;
  opt_config.weight_decay = hp.weight_decay;
  opt_config.clip_norm = defaults.clip_norm;
  opt_config.total_steps = micro_batches * epochs;
  AdamW optimizer(params, opt_config);

  Rng shuffle_rng = derive_stream(defaults.seed, "head.shuffle");
  std::vector<size_t> order(episode.train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  float best_metric = -1.0f;
  float best_loss = std::numeric_limits<float>::infinity();
  auto snapshot = [&] {
    std::vector<std::vector<float>> snap;
    for (const auto& e : params.entries()) snap.push_back(e.tensor->data);
    return snap;
  };
  auto best_snap = snapshot();
  float phase_best_loss = std::numeric_limits<float>::infinity();
  int stale = 0;
  int global_step = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[size_t(shuffle_rng.uniform_int(int(i)))]);
    }
    double epoch_loss = 0.0;
    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t batch_end =
          std::min(order.size(), cursor + size_t(batch));
      const float inv = 1.0f / float(batch_end - cursor);
      params.zero_grads();
      for (size_t i = cursor; i < batch_end; ++i) {
        const Example& ex = episode.train[order[i]];
        Graph g;
        TensorPtr logits = head_logits(
            g, model, out.head,
            with_cls_sep(model.vocab, ex.x_in, model.config.l_max));
        TensorPtr probs = g.softmax_rows(logits);
        const std::pair<int, int> rc[] = {{0, ex.label}};
        TensorPtr loss = g.scale(g.log_floor(g.pick(probs, rc)), -1.0f);
        if (!all_finite(*loss)) {
          throw NumericError("head training: non-finite loss at step " +
                             std::to_string(global_step + 1));
        }
        epoch_loss += double(loss->scalar());
        g.backward(g.scale(loss, inv));
      }
      optimizer.step();
      ++global_step;
      cursor = batch_end;
    }

    // Dev pass.
    double dev_loss = 0.0;
    int correct = 0;
    for (const auto& ex : episode.dev) {
      Graph g;
      TensorPtr logits = head_logits(
          g, model, out.head,
          with_cls_sep(model.vocab, ex.x_in, model.config.l_max));
      TensorPtr probs = g.softmax_rows(logits);
      dev_loss += -std::log(
          std::max(double(probs->data[size_t(ex.label)]), 1e-12));
      int best = 0;
      for (int j = 1; j < probs->cols(); ++j) {
        if (probs->data[size_t(j)] > probs->data[size_t(best)]) best = j;
      }
      if (best == ex.label) ++correct;
    }
    const float dev_metric =
        episode.dev.empty() ? 0.0f : float(correct) / float(episode.dev.size());
    const float dev_loss_f =
        episode.dev.empty() ? 0.0f : float(dev_loss / double(episode.dev.size()));

    EpochRecord record;
    record.phase = 2;
    record.epoch = epoch;
    record.step = global_step;
    record.train_loss = float(epoch_loss / double(episode.train.size()));
    record.dev_loss = dev_loss_f;
    record.dev_metric = dev_metric;
    out.history.epochs.push_back(record);
    out.history.steps_full = global_step;

    if (dev_metric > best_metric ||
        (dev_metric == best_metric && dev_loss_f < best_loss)) {
      best_metric = dev_metric;
      best_loss = dev_loss_f;
      best_snap = snapshot();
    }
    if (dev_loss_f < phase_best_loss - 1e-6f) {
      phase_best_loss = dev_loss_f;
      stale = 0;
    } else if (++stale >= defaults.patience) {
      break;
    }
  }

  for (size_t i = 0; i < params.entries().size(); ++i) {
    params.entries()[i].tensor->data = best_snap[i];
  }
  out.dev_metric = best_metric;
  return out;
}

}  // namespace

float TrainedMethod::evaluate(const std::vector<Example>& data,
                              const std::string& metric) const {
  std::vector<int> preds, golds;
  preds.reserve(data.size());
  golds.reserve(data.size());
  for (const auto& ex : data) {
    golds.push_back(ex.label);
    if (kind == MethodKind::HeadFt) {
      preds.push_back(head_predict(model, head, ex));
    } else {
      EncodedPrompt prompt =
          assemble_plan(ex.x_in, plan, model.vocab, model.config.l_max);
      preds.push_back(predict_class(model, prompt, plan.label_sets));
    }
  }
  int n_classes = 0;
  for (int g : golds) n_classes = std::max(n_classes, g + 1);
  for (int p : preds) n_classes = std::max(n_classes, p + 1);
  if (metric == "micro_f1") return micro_f1_metric(preds, golds, n_classes);
  return accuracy_metric(preds, golds);
}

TrainedMethod run_single(const ToyMlmModel& pretrained, const Task& task,
                         const EpisodeDataset& episode,
                         const MethodSpec& method, const GridSpace::Point& hp,
                         const ProtocolConfig& config,
                         LabeledStates* captured) {
  TrainConfig tc = config.train;
  tc.lr_full = hp.lr_full;
  tc.lr_prompt = hp.lr_prompt;
  tc.weight_decay = hp.weight_decay;
  tc.lambda = hp.lambda;
  tc.batch = hp.batch;
  if (hp.epochs > 0) {
    tc.epochs_joint = hp.epochs;
    tc.epochs_full = hp.epochs;
  }

  if (method.kind == MethodKind::HeadFt) {
    return train_head_method(pretrained, task, episode, hp, tc);
  }

  TrainedMethod out;
  out.kind = method.kind;
  out.model = pretrained.clone();
  ToyMlmModel& model = out.model;

  const bool diff_template =
      method.kind == MethodKind::Dart && method.diff_template;
  const bool diff_label =
      method.kind == MethodKind::Dart && method.diff_label;
  tc.fluency = method.fluency && method.kind == MethodKind::Dart;

  PromptPlan plan;
  plan.mask_index = task.base_mask_index;
  if (diff_template || diff_label) {
    PromptSpec spec =
        build_prompt_spec(model.vocab, int(task.base_template_ids.size()),
                          task.n_classes, task.base_mask_index);
    Rng init_rng = derive_stream(tc.seed, "prompt.init");
    init_prompt_embeddings(model, spec, task.base_template_ids,
                           task.base_label_ids, init_rng);
    plan.template_ids =
        diff_template ? spec.template_slot_ids : task.base_template_ids;
    if (diff_label) {
      for (int id : spec.label_slot_ids) plan.label_sets.push_back({id});
    } else {
      for (int id : task.base_label_ids) plan.label_sets.push_back({id});
    }
    if (diff_template) {
      plan.trainable_rows.insert(plan.trainable_rows.end(),
                                 spec.template_slot_ids.begin(),
                                 spec.template_slot_ids.end());
    }
    if (diff_label) {
      plan.trainable_rows.insert(plan.trainable_rows.end(),
                                 spec.label_slot_ids.begin(),
                                 spec.label_slot_ids.end());
    }
  } else {
    plan.template_ids = task.base_template_ids;
    for (int id : task.base_label_ids) plan.label_sets.push_back({id});
  }
  if (plan.trainable_rows.empty()) tc.policy = PhasePolicy::FullOnly;

  StepHook hook;
  MaskStateCapture capture(config.capture_steps, episode.dev, plan);
  if (captured && !config.capture_steps.empty()) hook = capture.hook();

  TrainResult result =
      train_dart(model, plan, episode.train, episode.dev, tc, hook);
  if (captured && !config.capture_steps.empty()) {
    *captured = capture.take(result.history.steps_joint +
                             result.history.steps_full);
  }
  out.plan = std::move(plan);
  out.history = std::move(result.history);
  out.dev_metric = result.best_dev_metric;
  return out;
}

GridSearchResult grid_search(const ToyMlmModel& pretrained, const Task& task,
                             const EpisodeDataset& episode,
                             const MethodSpec& method, const GridSpace& grid,
                             const ProtocolConfig& config) {
  const auto points = grid.enumerate();
  if (points.empty()) throw ConfigError("empty grid");
  GridSearchResult best;
  bool have_best = false;
  for (const auto& point : points) {
    TrainedMethod run =
        run_single(pretrained, task, episode, method, point, config);
    if (!have_best || run.dev_metric > best.best_dev_metric) {
      have_best = true;
      best.best = point;
      best.best_dev_metric = run.dev_metric;
      best.best_run = std::move(run);
    }
  }
  return best;
}

void RunReport::finalize() {
  double sum = 0.0;
  for (const auto& r : per_seed) sum += double(r.test_metric);
  mean = per_seed.empty() ? 0.0 : sum / double(per_seed.size());
  double sq = 0.0;
  for (const auto& r : per_seed) {
    const double d = double(r.test_metric) - mean;
    sq += d * d;
  }
  stddev = per_seed.empty() ? 0.0 : std::sqrt(sq / double(per_seed.size()));
}

std::string RunReport::csv_header() {
  return "method,task,k,seed,metric,config_json\n";
}

std::string RunReport::to_csv_rows() const {
  std::ostringstream os;
  char buf[64];
  for (const auto& r : per_seed) {
    std::string config = r.chosen.to_json();
    std::string quoted = "\"";
    for (char c : config) {
      if (c == '"') quoted += "\"\"";
      else quoted.push_back(c);
    }
    quoted += "\"";
    std::snprintf(buf, sizeof(buf), "%.9g", double(r.test_metric));
    os << method << "," << task << "," << k << "," << r.seed << "," << buf
       << "," << quoted << "\n";
  }
  return os.str();
}

RunReport run_protocol(const ToyMlmModel& pretrained, const Task& task, int k,
                       const std::vector<uint64_t>& seeds,
                       const MethodSpec& method, const GridSpace& grid,
                       const ProtocolConfig& config) {
  if (seeds.empty()) throw ConfigError("run_protocol: no seeds");
  RunReport report;
  report.method = method.tag();
  report.task = task.name;
  report.k = k;
  for (uint64_t seed : seeds) {
    EpisodeDataset episode = sample_k_shot(task, k, seed);
    ProtocolConfig seed_config = config;
    seed_config.train.seed = seed;
    GridSearchResult best =
        grid_search(pretrained, task, episode, method, grid, seed_config);
    // Selection is done; the single sanctioned test read happens now.
    const float test_metric =
        best.best_run.evaluate(episode.test_set(), task.metric);
    SeedResult r;
    r.seed = seed;
    r.dev_metric = best.best_dev_metric;
    r.test_metric = test_metric;
    r.chosen = best.best;
    r.test_reads = episode.test_reads;
    r.split_checksum = episode.split_checksum();
    report.per_seed.push_back(r);
  }
  report.finalize();
  return report;
}

std::vector<RunReport> run_ablation_suite(const ToyMlmModel& pretrained,
                                          const Task& task, int k,
                                          const std::vector<uint64_t>& seeds,
                                          const GridSpace& grid,
                                          const ProtocolConfig& config) {
  std::vector<MethodSpec> arms(4);
  arms[0] = MethodSpec{MethodKind::Dart, true, true, true};
  arms[1] = MethodSpec{MethodKind::Dart, false, true, true};
  arms[2] = MethodSpec{MethodKind::Dart, true, false, true};
  arms[3] = MethodSpec{MethodKind::Dart, true, true, false};
  std::vector<RunReport> reports;
  for (const auto& arm : arms) {
    reports.push_back(
        run_protocol(pretrained, task, k, seeds, arm, grid, config));
  }
  return reports;
}

std::string aggregate_reports_json(const std::vector<RunReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& report : reports) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& r : report.per_seed) {
      per_seed.push_back({{"seed", r.seed},
                          {"dev_metric", r.dev_metric},
                          {"test_metric", r.test_metric},
                          {"config", nlohmann::json::parse(r.chosen.to_json())},
                          {"test_reads", r.test_reads},
                          {"split_checksum", r.split_checksum}});
    }
    j.push_back({{"method", report.method},
                 {"task", report.task},
                 {"k", report.k},
                 {"mean", report.mean},
                 {"std", report.stddev},
                 {"per_seed", per_seed}});
  }
  return j.dump(2);
}

}  // namespace dart
