#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dart/checkpoint.hpp"
#include "dart/corpus.hpp"
#include "dart/errors.hpp"
#include "dart/model.hpp"
#include "dart/vocab.hpp"
#include "support/finite_diff.hpp"

using namespace dart;

namespace {

std::vector<std::string> letters(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::string(1, char('a' + i)));
  return out;
}

ToyMlmModel tiny_model(const Vocabulary& vocab, int d = 16, int layers = 1,
                       int l_max = 16, uint64_t seed = 3) {
  ModelConfig config;
  config.d_model = d;
  config.n_layers = layers;
  config.n_heads = 4;
  config.l_max = l_max;
  Rng rng(seed);
  return ToyMlmModel::init(config, vocab, rng);
}

}  // namespace

TEST_CASE("vocabulary layout: specials, naturals, reserved tail") {
  Vocabulary v = build_vocab(letters(10), 8);
  CHECK(v.size() == 22);
  CHECK(v.pad_id == 0);
  CHECK(v.cls_id == 1);
  CHECK(v.sep_id == 2);
  CHECK(v.mask_id == 3);
  CHECK(v.reserved_begin == 14);
  CHECK(v.reserved_end == 22);
  CHECK(v.id_of("a") == 4);
  CHECK(v.is_natural(4));
  CHECK(v.is_reserved(14));
  CHECK(!v.is_natural(14));
  CHECK(v.token_of(14) == "[unused1]");
}

TEST_CASE("vocabulary rejects zero reserved slots and duplicates") {
  CHECK_THROWS_AS(build_vocab(letters(4), 0), ValidationError);
  CHECK_THROWS_AS(build_vocab({"a", "a"}, 2), ValidationError);
}

TEST_CASE("encode: whitespace split, lowercase, unk fallback, round trip") {
  Vocabulary v = build_vocab({"a", "b", "[unk]"}, 2);
  CHECK(encode(v, "a b a") == std::vector<int>{4, 5, 4});
  CHECK(encode(v, "").empty());
  CHECK(encode(v, "zzz") == std::vector<int>{v.unk_id});
  CHECK(encode(v, "A  B") == std::vector<int>{4, 5});
  CHECK(decode(v, encode(v, "a b b a")) == "a b b a");

  Vocabulary no_unk = build_vocab({"a"}, 1);
  CHECK_THROWS_AS(encode(no_unk, "zzz"), ValidationError);
}

TEST_CASE("forward produces LxV logits whose softmax rows sum to one") {
  Vocabulary v = build_vocab(letters(8), 4);
  ToyMlmModel model = tiny_model(v);
  std::vector<int> ids = {v.cls_id, 4, 5, 6, v.mask_id, v.sep_id};
  Graph g;
  auto logits = model.forward_logits(g, ids);
  REQUIRE(logits->shape == std::vector<int>{int(ids.size()), v.size()});
  auto probs = g.softmax_rows(logits);
  for (int r = 0; r < int(ids.size()); ++r) {
    double sum = 0;
    for (int c = 0; c < v.size(); ++c) sum += probs->at(r, c);
    CHECK(std::fabs(sum - 1.0) < 1e-6);
  }
  CHECK_THROWS_AS(model.forward_logits(g, std::vector<int>(17, 4)),
                  CapacityError);
}

TEST_CASE("PAD positions never influence non-PAD logits") {
  Vocabulary v = build_vocab(letters(8), 4);
  ToyMlmModel model = tiny_model(v);
  std::vector<int> base = {v.cls_id, 4, 5, v.mask_id, v.sep_id};
  std::vector<int> padded = base;
  padded.push_back(v.pad_id);
  padded.push_back(v.pad_id);

  Graph g1, g2;
  auto a = model.forward_logits(g1, base);
  auto b = model.forward_logits(g2, padded);
  for (size_t i = 0; i < base.size(); ++i) {
    for (int c = 0; c < v.size(); ++c) {
      CHECK(std::fabs(a->at(int(i), c) - b->at(int(i), c)) < 1e-5f);
    }
  }

  // Swapping the two PAD tail positions is a no-op on the whole output.
  std::vector<int> swapped = padded;
  std::swap(swapped[5], swapped[6]);
  Graph g3;
  auto c = model.forward_logits(g3, swapped);
  CHECK(c->data == b->data);
}

TEST_CASE("tied decoder: a perturbed embedding row moves its logit column") {
  Vocabulary v = build_vocab(letters(8), 4);
  ToyMlmModel model = tiny_model(v);
  std::vector<int> ids = {v.cls_id, 4, v.mask_id, v.sep_id};

  Graph g1;
  auto before = model.forward_logits(g1, ids);

  const int target = 7;  // a natural token not present in the input
  auto row = model.embedding_row(target);
  for (size_t j = 0; j < row.size(); ++j) {
    row[j] += 0.1f * float(j % 5) - 0.15f;
  }
  model.set_embedding_row(target, row);

  Graph g2;
  ForwardResult after = model.forward_states(g2, ids);
  // Input embeddings unchanged, so hidden states match and the only logit
  // change is the tied decoder column of the perturbed row.
  bool column_moved = false;
  for (size_t p = 0; p < ids.size(); ++p) {
    double expect = 0.0;
    for (int j = 0; j < model.config.d_model; ++j) {
      expect += double(after.hidden->at(int(p), j)) * row[size_t(j)];
    }
    expect += model.decoder_bias->data[size_t(target)];
    CHECK(std::fabs(after.logits->at(int(p), target) - float(expect)) < 1e-4f);
    if (std::fabs(after.logits->at(int(p), target) -
                  before->at(int(p), target)) > 1e-6f) {
      column_moved = true;
    }
  }
  CHECK(column_moved);
}

TEST_CASE("every requires-grad leaf reachable from the MLM loss is registered") {
  Vocabulary v = build_vocab(letters(8), 4);
  ToyMlmModel model = tiny_model(v);
  model.set_trainable_all();
  std::vector<int> ids = {v.cls_id, 4, v.mask_id, 6, v.sep_id};
  Graph g;
  auto logits = model.forward_logits(g, ids);
  const int positions[] = {2};
  const int targets[] = {5};
  g.backward(mlm_loss(g, logits, positions, targets));

  for (const auto& leaf : g.leaves()) {
    if (!leaf->requires_grad) continue;
    bool registered = false;
    for (const auto& e : model.registry.entries()) {
      registered = registered || e.tensor.get() == leaf.get();
    }
    CHECK(registered);
  }
}

TEST_CASE("whole-model gradients match finite differences (2-layer, d=16)") {
  Vocabulary v = build_vocab(letters(10), 4);
  ToyMlmModel model = tiny_model(v, /*d=*/16, /*layers=*/2, /*l_max=*/12,
                                 /*seed=*/5);
  model.set_trainable_all();
  std::vector<int> ids = {v.cls_id, 4, v.mask_id, 6, 7, v.sep_id};
  const std::vector<int> positions = {2, 4};
  const std::vector<int> targets = {5, 8};

  auto loss_value = [&] {
    Graph g;
    auto logits = model.forward_logits(g, ids);
    return mlm_loss(g, logits, positions, targets)->scalar();
  };

  model.registry.zero_grads();
  Graph g;
  auto logits = model.forward_logits(g, ids);
  g.backward(mlm_loss(g, logits, positions, targets));

  for (const auto& e : model.registry.entries()) {
    const auto fd = testsupport::finite_diff_grad(*e.tensor, loss_value);
    const float err = testsupport::max_rel_err(e.tensor->grad, fd);
    INFO("parameter " << e.name << " max rel err " << err);
    CHECK(err < 1e-2f);
  }
}

TEST_CASE("pretrain: zero steps is a no-op with empty history") {
  Vocabulary v = build_vocab(letters(6), 4);
  ToyMlmModel model = tiny_model(v);
  const uint64_t before = model.registry.checksum();
  Corpus corpus;
  corpus.sentences = {{4, 5, 4, 5}};
  PretrainConfig config;
  config.steps = 0;
  auto history = pretrain(model, corpus, config);
  CHECK(history.step_loss.empty());
  CHECK(model.registry.checksum() == before);

  Corpus empty;
  config.steps = 10;
  CHECK_THROWS_AS(pretrain(model, empty, config), ValidationError);
}

TEST_CASE("pretrain learns a deterministic bigram grammar") {
  // Alternating two-token language: every masked token is decided by its
  // neighbors, so the Bayes accuracy is 1.0.
  Vocabulary v = build_vocab({"a", "b"}, 2);
  ToyMlmModel model = tiny_model(v, /*d=*/32, /*layers=*/1, /*l_max=*/16,
                                 /*seed=*/7);
  Corpus corpus;
  for (int s = 0; s < 64; ++s) {
    const int first = s % 2;
    const int len = 6 + (s % 5);
    std::vector<int> sentence;
    for (int i = 0; i < len; ++i) sentence.push_back(4 + ((first + i) % 2));
    corpus.sentences.push_back(sentence);
  }

  PretrainConfig config;
  config.steps = 500;
  config.batch = 8;
  config.lr = 2e-3f;
  config.seed = 11;
  auto history = pretrain(model, corpus, config);

  CHECK(history.heldout_loss_final < history.heldout_loss_initial);

  std::vector<std::vector<int>> heldout(corpus.sentences.end() - 6,
                                        corpus.sentences.end());
  MlmEval eval = evaluate_mlm(model, heldout);
  CHECK(eval.accuracy > 0.9f);

  // 100-step moving average of the training loss must not increase.
  REQUIRE(history.step_loss.size() == 500);
  std::vector<double> ma;
  for (size_t start = 0; start + 100 <= history.step_loss.size();
       start += 100) {
    double window = 0;
    for (size_t i = start; i < start + 100; ++i) window += history.step_loss[i];
    ma.push_back(window / 100.0);
  }
  // Non-increasing up to masking-noise jitter between windows.
  for (size_t i = 1; i < ma.size(); ++i) {
    CHECK(ma[i] <= (1.5 * ma[i - 1] + 1e-3));
  }
  CHECK(ma.back() < 0.1 * ma.front());
}

TEST_CASE("pretrain losses are bitwise identical across reruns") {
  Vocabulary v = build_vocab({"a", "b"}, 2);
  Corpus corpus;
  for (int s = 0; s < 16; ++s) {
    corpus.sentences.push_back({4, 5, 4, 5, 4, 5});
  }
  PretrainConfig config;
  config.steps = 25;
  config.batch = 4;
  config.seed = 9;

  ToyMlmModel m1 = tiny_model(v, 16, 1, 16, 21);
  ToyMlmModel m2 = tiny_model(v, 16, 1, 16, 21);
  auto h1 = pretrain(m1, corpus, config);
  auto h2 = pretrain(m2, corpus, config);
  REQUIRE(h1.step_loss.size() == h2.step_loss.size());
  for (size_t i = 0; i < h1.step_loss.size(); ++i) {
    CHECK(h1.step_loss[i] == h2.step_loss[i]);
  }
  CHECK(m1.registry.checksum() == m2.registry.checksum());
}

TEST_CASE("checkpoint round trip is bit exact") {
  namespace fs = std::filesystem;
  Vocabulary v = build_vocab(letters(8), 6);
  ToyMlmModel model = tiny_model(v);
  PromptSpec spec = build_prompt_spec(v, 3, 2, 2);
  const fs::path path = fs::temp_directory_path() / "dart_test_ckpt.bin";

  save_checkpoint(path.string(), model, spec);
  LoadedCheckpoint loaded = load_checkpoint(path.string());

  CHECK(loaded.model.registry.checksum() == model.registry.checksum());
  CHECK(loaded.model.vocab.tokens == model.vocab.tokens);
  CHECK(loaded.model.vocab.reserved_begin == model.vocab.reserved_begin);
  REQUIRE(loaded.prompt_spec.has_value());
  CHECK(loaded.prompt_spec->m == 3);
  CHECK(loaded.prompt_spec->n == 2);
  CHECK(loaded.prompt_spec->template_slot_ids == spec.template_slot_ids);

  // Truncated file must fail loudly.
  const fs::path broken = fs::temp_directory_path() / "dart_test_broken.bin";
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() / 2);
    std::ofstream out(broken, std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_AS(load_checkpoint(broken.string()), ArtifactError);

  const fs::path garbage = fs::temp_directory_path() / "dart_test_garbage.bin";
  {
    std::ofstream out(garbage, std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_checkpoint(garbage.string()), ArtifactError);

  fs::remove(path);
  fs::remove(broken);
  fs::remove(garbage);
}
