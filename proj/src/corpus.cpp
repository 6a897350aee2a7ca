#include "dart/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "dart/errors.hpp"

namespace dart {

namespace grammar {

const std::vector<std::string>& subjects_media() {
  static const std::vector<std::string> w = {"movie", "film",   "show",
                                             "game",  "script", "sequel"};
  return w;
}

const std::vector<std::string>& subjects_food() {
  static const std::vector<std::string> w = {"meal", "dinner", "cake",
                                             "soup", "bread",  "coffee"};
  return w;
}

const std::vector<std::string>& subjects_nature() {
  static const std::vector<std::string> w = {"flower", "tree",   "river",
                                             "garden", "meadow", "forest"};
  return w;
}

const std::vector<std::string>& subjects_tech() {
  static const std::vector<std::string> w = {"robot",   "drone",  "engine",
                                             "machine", "rocket", "gadget"};
  return w;
}

const std::vector<std::string>& positive_adjectives() {
  static const std::vector<std::string> w = {
      "great",  "good",     "amazing",   "fantastic", "wonderful",
      "superb", "lovely",   "brilliant", "delightful", "excellent"};
  return w;
}

const std::vector<std::string>& negative_adjectives() {
  static const std::vector<std::string> w = {
      "terrible", "bad",  "awful", "horrible", "boring",
      "poor",     "dull", "weak",  "dreadful", "lousy"};
  return w;
}

const std::vector<std::string>& neutral_adjectives() {
  static const std::vector<std::string> w = {"long", "plain", "new",  "old",
                                             "loud", "quiet", "big",  "small"};
  return w;
}

const std::vector<std::string>& day_contexts() {
  static const std::vector<std::string> w = {"day", "dawn", "noon", "morning"};
  return w;
}

const std::vector<std::string>& night_contexts() {
  static const std::vector<std::string> w = {"night", "dusk", "midnight",
                                             "evening"};
  return w;
}

const std::vector<std::string>& summary_words() {
  // (media, food, nature, tech) x (pos, neg)
  static const std::vector<std::string> w = {
      "masterpiece", "flop",     "delicious", "stale",
      "blooming",    "withered", "efficient", "broken"};
  return w;
}

const std::vector<std::string>& link_verbs() {
  static const std::vector<std::string> w = {"was", "is", "seemed", "felt",
                                             "looked"};
  return w;
}

const std::vector<std::string>& action_verbs() {
  static const std::vector<std::string> w = {"ran",     "grew",    "played",
                                             "worked",  "stopped", "started",
                                             "ended",   "moved"};
  return w;
}

const std::vector<std::string>& intensifiers() {
  static const std::vector<std::string> w = {"very", "really", "quite",
                                             "truly"};
  return w;
}

namespace {

const std::vector<std::string>& function_words() {
  static const std::vector<std::string> w = {
      "[unk]", ".", ",", "it", "this", "that", "the", "a",  "and",
      "but",   "so", "at", "in", "on",  "short", "to", "of"};
  return w;
}

const std::vector<std::string>& misc_words() {
  static const std::vector<std::string> w = {
      "home",    "park",    "city",    "station", "kitchen", "cinema",
      "lab",     "yard",    "slowly",  "quickly", "badly",   "nicely",
      "smoothly", "roughly", "time",   "idea",    "style",   "scene",
      "music",   "sound",   "taste",   "smell",   "color",   "shape",
      "price",   "story",   "plot",    "acting",  "cast",    "crew",
      "chef",    "writer",  "editor",  "farmer",  "pilot",   "friend",
      "he",      "she",     "they",    "we",      "i",       "you",
      "one",     "two",     "three",   "again",   "today",   "always",
      "never",   "often",   "door",    "window",  "road",    "light",
      "paper",   "table",   "chair",   "wall",    "corner",  "voice",
      "letter",  "song",    "dance",   "walk",    "talk",    "dream",
      "cloud",   "stone",   "glass",   "wheel",   "spring",  "summer",
      "autumn",  "winter",  "north",   "south",   "east",    "west"};
  return w;
}

}  // namespace

std::vector<std::string> natural_tokens() {
  std::vector<std::string> all;
  auto append = [&all](const std::vector<std::string>& w) {
    all.insert(all.end(), w.begin(), w.end());
  };
  append(function_words());
  append(subjects_media());
  append(subjects_food());
  append(subjects_nature());
  append(subjects_tech());
  append(positive_adjectives());
  append(negative_adjectives());
  append(neutral_adjectives());
  append(day_contexts());
  append(night_contexts());
  append(summary_words());
  append(link_verbs());
  append(action_verbs());
  append(intensifiers());
  append(misc_words());
  return all;
}

bool interaction_positive(const std::string& subject, const std::string& ctx) {
  // Balanced irregular pair table: every subject is positive with exactly
  // half of the contexts, so neither token alone predicts the label; the
  // pair does. Irregular (per-subject permuted) rather than group parity:
  // parity rules do not become learnable at this model scale.
  static const std::vector<std::string> all_ctx = [] {
    std::vector<std::string> v = day_contexts();
    for (const auto& w : night_contexts()) v.push_back(w);
    return v;
  }();
  int j = -1;
  for (size_t i = 0; i < all_ctx.size(); ++i) {
    if (all_ctx[i] == ctx) j = int(i);
  }
  if (j < 0) return false;
  Rng perm_rng(fnv1a64(subject) ^ 0x5bd1e995ULL);
  std::vector<int> perm = {0, 1, 2, 3, 4, 5, 6, 7};
  for (size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[size_t(perm_rng.uniform_int(int(i)))]);
  }
  for (int k = 0; k < 8; ++k) {
    if (perm[size_t(k)] == j) return k < 4;
  }
  return false;
}

int summary_index(int category, bool positive) {
  return category * 2 + (positive ? 0 : 1);
}

}  // namespace grammar

Vocabulary build_sentiment_vocab(int reserved_count) {
  return build_vocab(grammar::natural_tokens(), reserved_count);
}

namespace {

using grammar::action_verbs;
using grammar::day_contexts;
using grammar::intensifiers;
using grammar::link_verbs;
using grammar::negative_adjectives;
using grammar::night_contexts;
using grammar::neutral_adjectives;
using grammar::positive_adjectives;
using grammar::subjects_food;
using grammar::subjects_media;
using grammar::subjects_nature;
using grammar::subjects_tech;
using grammar::summary_words;

const std::vector<std::string>& pick_category(int cat) {
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

}  // namespace

Corpus generate_sentiment_corpus(const Vocabulary& vocab, int n_sentences,
                                 Rng& rng) {
  if (n_sentences <= 0) throw ValidationError("corpus size must be positive");
  Corpus corpus;
  corpus.sentences.reserve(size_t(n_sentences));

  // Two-clause samples join with an explicit [SEP], mirroring the prompt
  // layout [CLS] X [SEP] T [SEP], so the masked second clause is predictable
  // only from the first clause's content.
  auto two_clause = [&vocab](const std::string& first,
                             const std::string& second) {
    std::vector<int> ids = encode(vocab, first);
    ids.push_back(vocab.sep_id);
    const std::vector<int> tail = encode(vocab, second);
    ids.insert(ids.end(), tail.begin(), tail.end());
    return ids;
  };

  // Polarity-bearing adjectives sit at fixed clause positions; optional
  // variation (trailing adverbs) comes after them. At this scale attention
  // is position-addressed early in training, so a signal that wanders
  // between positions never gets picked up.
  static const std::vector<std::string> tails = {"today", "again", "always",
                                                 "never"};
  for (int s = 0; s < n_sentences; ++s) {
    const double u = rng.uniform();
    if (u < 0.25) {
      // Restatement: the second clause repeats the first clause's polarity,
      // half the time the very same adjective (copying forms the
      // content-addressed attention early).
      const int cat = rng.uniform_int(4);
      const bool positive = rng.bernoulli(0.5);
      const auto& adjs =
          positive ? positive_adjectives() : negative_adjectives();
      const std::string adj_a = choice(adjs, rng);
      std::string first = "the " + choice(pick_category(cat), rng) + " " +
                          choice(link_verbs(), rng) + " " + adj_a;
      if (rng.bernoulli(0.5)) first += " " + choice(tails, rng);
      const std::string adj_b = rng.bernoulli(0.5) ? adj_a : choice(adjs, rng);
      const std::string second =
          "it " + choice(link_verbs(), rng) + " " + adj_b + " .";
      corpus.sentences.push_back(two_clause(first, second));
    } else if (u < 0.70) {
      // Interaction: the second clause's polarity follows the
      // subject-context rule, with no polarity word in the first clause.
      const bool nature = rng.bernoulli(0.5);
      const auto& subjects = nature ? subjects_nature() : subjects_tech();
      const std::string subject = choice(subjects, rng);
      const bool day = rng.bernoulli(0.5);
      const std::string ctx =
          day ? choice(day_contexts(), rng) : choice(night_contexts(), rng);
      const bool positive = grammar::interaction_positive(subject, ctx);
      const auto& adjs =
          positive ? positive_adjectives() : negative_adjectives();
      const std::string first =
          "the " + subject + " " + choice(action_verbs(), rng) + " at " + ctx;
      const std::string second =
          "it " + choice(link_verbs(), rng) + " " + choice(adjs, rng) + " .";
      corpus.sentences.push_back(two_clause(first, second));
    } else if (u < 0.90) {
      // Summary: the second clause names the (category, polarity) summary.
      const int cat = rng.uniform_int(4);
      const bool positive = rng.bernoulli(0.5);
      const auto& adjs =
          positive ? positive_adjectives() : negative_adjectives();
      const std::string summary =
          summary_words()[size_t(grammar::summary_index(cat, positive))];
      const std::string first = "the " + choice(pick_category(cat), rng) +
                                " " + choice(link_verbs(), rng) + " " +
                                choice(adjs, rng);
      corpus.sentences.push_back(
          two_clause(first, "in short " + summary + " ."));
    } else {
      // Neutral filler keeps the rest of the vocabulary in play.
      static const std::vector<std::string> places = {
          "home", "park", "city", "station", "kitchen", "cinema", "lab",
          "yard"};
      static const std::vector<std::string> adverbs = {
          "slowly", "quickly", "badly", "nicely", "smoothly", "roughly"};
      static const std::vector<std::string> nouns = {
          "time",  "idea",  "style", "scene", "music", "sound",
          "taste", "smell", "story", "plot",  "voice", "song"};
      std::string text;
      if (rng.bernoulli(0.5)) {
        const int cat = rng.uniform_int(4);
        text = "the " + choice(pick_category(cat), rng) + " " +
               choice(action_verbs(), rng) + " " + choice(adverbs, rng) +
               " at the " + choice(places, rng) + " .";
      } else {
        text = "the " + choice(nouns, rng) + " " + choice(link_verbs(), rng) +
               " ";
        if (rng.bernoulli(0.5)) text += choice(intensifiers(), rng) + " ";
        text += choice(neutral_adjectives(), rng) + " .";
      }
      corpus.sentences.push_back(encode(vocab, text));
    }
  }
  return corpus;
}

namespace {

struct MaskedBatchItem {
  std::vector<int> ids;  // [CLS] sentence [SEP] with masks applied
  std::vector<int> positions;
  std::vector<int> targets;
};

MaskedBatchItem mask_sentence(const std::vector<int>& sentence,
                              const Vocabulary& vocab, float mask_prob,
                              Rng& rng) {
  MaskedBatchItem item;
  item.ids.push_back(vocab.cls_id);
  item.ids.insert(item.ids.end(), sentence.begin(), sentence.end());
  item.ids.push_back(vocab.sep_id);
  // Only natural tokens are masked; in-sentence [SEP] markers stay put.
  std::vector<int> candidates;
  for (size_t i = 0; i < sentence.size(); ++i) {
    if (vocab.is_natural(sentence[i])) candidates.push_back(int(i));
  }
  for (int i : candidates) {
    if (rng.uniform() < mask_prob) {
      item.positions.push_back(i + 1);
      item.targets.push_back(sentence[size_t(i)]);
    }
  }
  if (item.positions.empty() && !candidates.empty()) {
    const int pick = candidates[size_t(rng.uniform_int(int(candidates.size())))];
    item.positions.push_back(pick + 1);
    item.targets.push_back(sentence[size_t(pick)]);
  }
  for (int p : item.positions) item.ids[size_t(p)] = vocab.mask_id;
  return item;
}

}  // namespace

PretrainHistory pretrain(ToyMlmModel& model, const Corpus& corpus,
                         const PretrainConfig& config) {
  if (corpus.sentences.empty()) {
    throw ValidationError("pretrain: empty corpus");
  }
  PretrainHistory history;
  if (config.steps == 0) return history;
  if (config.steps < 0) throw ConfigError("pretrain: negative step count");

  // Held-out slice: deterministic tail of the corpus.
  const size_t heldout =
      std::max<size_t>(1, size_t(config.heldout_frac *
                                 double(corpus.sentences.size())));
  const size_t train_n = corpus.sentences.size() - heldout;
  if (train_n == 0) throw ValidationError("pretrain: corpus too small");
  std::vector<std::vector<int>> heldout_sentences(
      corpus.sentences.end() - long(heldout), corpus.sentences.end());

  history.heldout_loss_initial = evaluate_mlm(model, heldout_sentences).loss;

  model.set_trainable_all();
  AdamWConfig opt_config;
  opt_config.lr = config.lr;
  opt_config.weight_decay = config.weight_decay;
  opt_config.total_steps = config.lr_schedule ? config.steps : 0;
  AdamW optimizer(model.registry, opt_config);

  Rng batch_rng = derive_stream(config.seed, "pretrain.batch");
  Rng mask_rng = derive_stream(config.seed, "pretrain.mask");

  for (int step = 0; step < config.steps; ++step) {
    model.registry.zero_grads();
    double step_loss = 0.0;
    const float inv_batch = 1.0f / float(config.batch);
    for (int b = 0; b < config.batch; ++b) {
      const auto& sentence =
          corpus.sentences[size_t(batch_rng.uniform_int(int(train_n)))];
      MaskedBatchItem item =
          mask_sentence(sentence, model.vocab, config.mask_prob, mask_rng);
      Graph g;
      TensorPtr logits = model.forward_logits(g, item.ids);
      TensorPtr loss =
          g.scale(mlm_loss(g, logits, item.positions, item.targets),
                  inv_batch);
      if (!all_finite(*loss)) {
        throw NumericError("pretrain: non-finite loss at step " +
                           std::to_string(step));
      }
      step_loss += double(loss->scalar());
      g.backward(loss);
    }
    optimizer.step();
    history.step_loss.push_back(float(step_loss));
  }

  history.heldout_loss_final = evaluate_mlm(model, heldout_sentences).loss;
  return history;
}

MlmEval evaluate_mlm(const ToyMlmModel& model,
                     const std::vector<std::vector<int>>& sentences,
                     int max_positions) {
  MlmEval eval;
  double loss = 0.0;
  int correct = 0, total = 0;
  for (const auto& sentence : sentences) {
    for (size_t i = 0; i < sentence.size() && total < max_positions; ++i) {
      if (!model.vocab.is_natural(sentence[i])) continue;
      std::vector<int> ids;
      ids.push_back(model.vocab.cls_id);
      ids.insert(ids.end(), sentence.begin(), sentence.end());
      ids.push_back(model.vocab.sep_id);
      ids[i + 1] = model.vocab.mask_id;
      Graph g;
      TensorPtr logits = model.forward_logits(g, ids);
      TensorPtr probs = g.softmax_rows(g.slice_rows(logits, int(i + 1), 1));
      const float p = std::max(probs->data[size_t(sentence[i])], 1e-12f);
      loss += -std::log(double(p));
      int argmax = 0;
      for (int v = 1; v < model.config.vocab_size; ++v) {
        if (probs->data[size_t(v)] > probs->data[size_t(argmax)]) argmax = v;
      }
      if (argmax == sentence[i]) ++correct;
      ++total;
    }
    if (total >= max_positions) break;
  }
  if (total > 0) {
    eval.loss = float(loss / total);
    eval.accuracy = float(correct) / float(total);
  }
  return eval;
}

}  // namespace dart
