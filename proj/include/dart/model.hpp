#pragma once

#include <span>
#include <vector>

#include "dart/optim.hpp"
#include "dart/rng.hpp"
#include "dart/tensor.hpp"
#include "dart/vocab.hpp"

namespace dart {

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int l_max = 64;
  float ln_eps = 1e-5f;
  float init_std = 0.1f;
};

struct EncoderLayer {
  TensorPtr ln1_gain, ln1_bias;
  TensorPtr wq, bq, wk, bk, wv, bv, wo, bo;
  TensorPtr ln2_gain, ln2_bias;
  TensorPtr w_ff1, b_ff1, w_ff2, b_ff2;
};

struct ForwardResult {
  TensorPtr hidden;  // [L x d], final encoder output (pre-decoder)
  TensorPtr logits;  // [L x V]
};

// Tiny pre-norm transformer encoder MLM. The output decoder is the embedding
// table itself (tied): logits = H * E^T + decoder_bias.
class ToyMlmModel {
 public:
  ModelConfig config;
  Vocabulary vocab;

  TensorPtr embedding;    // [V x d]
  TensorPtr positional;   // [l_max x d]
  TensorPtr decoder_bias; // [V]
  TensorPtr final_ln_gain, final_ln_bias;
  std::vector<EncoderLayer> layers;

  ParamRegistry registry;

  static ToyMlmModel init(const ModelConfig& config, Vocabulary vocab,
                          Rng& rng);
  ToyMlmModel clone() const;

  ForwardResult forward_states(Graph& g, std::span<const int> ids) const;
  TensorPtr forward_logits(Graph& g, std::span<const int> ids) const;

  // Phase control. full: every parameter trainable. prompt_only: nothing
  // trainable except the given embedding rows.
  void set_trainable_all();
  void set_trainable_rows_only(const std::vector<int>& embedding_rows);

  std::vector<float> embedding_row(int id) const;
  void set_embedding_row(int id, std::span<const float> values);

  // Deep parameter snapshots, used for best-dev checkpointing.
  std::vector<std::vector<float>> snapshot_params() const;
  void restore_params(const std::vector<std::vector<float>>& snap);

 private:
  void register_params();
};

// Mean over `positions` of -log softmax(logits[pos])[target]. Shared by MLM
// pre-training and the fluency objective.
TensorPtr mlm_loss(Graph& g, const TensorPtr& logits,
                   std::span<const int> positions,
                   std::span<const int> targets);

}  // namespace dart
