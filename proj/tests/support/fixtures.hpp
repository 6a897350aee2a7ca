#pragma once

#include "dart/corpus.hpp"
#include "dart/model.hpp"

namespace testsupport {

// One small pretrained model per test process; training-dependent tests
// clone it instead of pretraining again.
inline const dart::ToyMlmModel& pretrained_tiny() {
  static const dart::ToyMlmModel model = [] {
    dart::ModelConfig config;
    config.d_model = 32;
    config.n_layers = 1;
    config.n_heads = 4;
    config.l_max = 32;
    dart::Rng rng(2024);
    dart::ToyMlmModel m =
        dart::ToyMlmModel::init(config, dart::build_sentiment_vocab(16), rng);
    dart::Rng corpus_rng = dart::derive_stream(2024, "fixture.corpus");
    dart::Corpus corpus =
        dart::generate_sentiment_corpus(m.vocab, 1200, corpus_rng);
    dart::PretrainConfig pc;
    pc.steps = 500;
    pc.batch = 8;
    pc.lr = 2e-3f;
    pc.seed = 77;
    dart::pretrain(m, corpus, pc);
    return m;
  }();
  return model;
}

}  // namespace testsupport
