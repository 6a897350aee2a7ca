#include "dart/model.hpp"

#include <cmath>
#include <string>

#include "dart/errors.hpp"

namespace dart {

namespace {

TensorPtr init_normal(std::vector<int> shape, Rng& rng, float stddev = 0.02f) {
  auto t = make_tensor(std::move(shape));
  for (float& v : t->data) v = rng.normal_f(0.0f, stddev);
  return t;
}

}  // namespace

ToyMlmModel ToyMlmModel::init(const ModelConfig& config, Vocabulary vocab,
                              Rng& rng) {
  if (config.d_model % config.n_heads != 0) {
    throw ConfigError("d_model must be divisible by n_heads");
  }
  ToyMlmModel m;
  m.config = config;
  m.config.vocab_size = vocab.size();
  m.vocab = std::move(vocab);

  const int v = m.config.vocab_size;
  const int d = m.config.d_model;
  const int ff = 4 * d;
  const float std = config.init_std;

  m.embedding = init_normal({v, d}, rng, std);
  m.positional = init_normal({config.l_max, d}, rng, std);
  m.decoder_bias = make_tensor({v});
  m.final_ln_gain = make_tensor({d}, 1.0f);
  m.final_ln_bias = make_tensor({d});

  for (int l = 0; l < config.n_layers; ++l) {
    EncoderLayer layer;
    layer.ln1_gain = make_tensor({d}, 1.0f);
    layer.ln1_bias = make_tensor({d});
    layer.wq = init_normal({d, d}, rng, std);
    layer.bq = make_tensor({d});
    layer.wk = init_normal({d, d}, rng, std);
    layer.bk = make_tensor({d});
    layer.wv = init_normal({d, d}, rng, std);
    layer.bv = make_tensor({d});
    layer.wo = init_normal({d, d}, rng, std);
    layer.bo = make_tensor({d});
    layer.ln2_gain = make_tensor({d}, 1.0f);
    layer.ln2_bias = make_tensor({d});
    layer.w_ff1 = init_normal({d, ff}, rng, std);
    layer.b_ff1 = make_tensor({ff});
    layer.w_ff2 = init_normal({ff, d}, rng, std);
    layer.b_ff2 = make_tensor({d});
    m.layers.push_back(std::move(layer));
  }
  m.register_params();
  return m;
}

void ToyMlmModel::register_params() {
  registry = ParamRegistry();
  registry.add("embedding", embedding);
  registry.add("positional", positional);
  registry.add("decoder_bias", decoder_bias, /*decay_exempt=*/true);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    EncoderLayer& y = layers[l];
    registry.add(p + "ln1.gain", y.ln1_gain, true);
    registry.add(p + "ln1.bias", y.ln1_bias, true);
    registry.add(p + "attn.wq", y.wq);
    registry.add(p + "attn.bq", y.bq, true);
    registry.add(p + "attn.wk", y.wk);
    registry.add(p + "attn.bk", y.bk, true);
    registry.add(p + "attn.wv", y.wv);
    registry.add(p + "attn.bv", y.bv, true);
    registry.add(p + "attn.wo", y.wo);
    registry.add(p + "attn.bo", y.bo, true);
    registry.add(p + "ln2.gain", y.ln2_gain, true);
    registry.add(p + "ln2.bias", y.ln2_bias, true);
    registry.add(p + "ff.w1", y.w_ff1);
    registry.add(p + "ff.b1", y.b_ff1, true);
    registry.add(p + "ff.w2", y.w_ff2);
    registry.add(p + "ff.b2", y.b_ff2, true);
  }
  registry.add("final_ln.gain", final_ln_gain, true);
  registry.add("final_ln.bias", final_ln_bias, true);
}

ToyMlmModel ToyMlmModel::clone() const {
  ToyMlmModel m;
  m.config = config;
  m.vocab = vocab;
  auto copy = [](const TensorPtr& t) {
    auto c = make_tensor(t->shape);
    c->data = t->data;
    return c;
  };
  m.embedding = copy(embedding);
  m.positional = copy(positional);
  m.decoder_bias = copy(decoder_bias);
  m.final_ln_gain = copy(final_ln_gain);
  m.final_ln_bias = copy(final_ln_bias);
  for (const auto& y : layers) {
    EncoderLayer c;
    c.ln1_gain = copy(y.ln1_gain);
    c.ln1_bias = copy(y.ln1_bias);
    c.wq = copy(y.wq);
    c.bq = copy(y.bq);
    c.wk = copy(y.wk);
    c.bk = copy(y.bk);
    c.wv = copy(y.wv);
    c.bv = copy(y.bv);
    c.wo = copy(y.wo);
    c.bo = copy(y.bo);
    c.ln2_gain = copy(y.ln2_gain);
    c.ln2_bias = copy(y.ln2_bias);
    c.w_ff1 = copy(y.w_ff1);
    c.b_ff1 = copy(y.b_ff1);
    c.w_ff2 = copy(y.w_ff2);
    c.b_ff2 = copy(y.b_ff2);
    m.layers.push_back(std::move(c));
  }
  m.register_params();
  return m;
}

ForwardResult ToyMlmModel::forward_states(Graph& g,
                                          std::span<const int> ids) const {
  const int L = int(ids.size());
  if (L == 0) throw ValidationError("forward: empty input");
  if (L > config.l_max) {
    throw CapacityError("forward: sequence length " + std::to_string(L) +
                        " exceeds l_max " + std::to_string(config.l_max));
  }
  const int d = config.d_model;
  const int heads = config.n_heads;
  const int hd = d / heads;

  std::vector<int> pos_ids(static_cast<size_t>(L));
  for (int i = 0; i < L; ++i) pos_ids[size_t(i)] = i;

  // Additive key mask: PAD keys never receive attention.
  auto key_mask = make_tensor({L});
  for (int i = 0; i < L; ++i) {
    key_mask->data[size_t(i)] = (ids[i] == vocab.pad_id) ? -1e9f : 0.0f;
  }

  TensorPtr h = g.add(g.embedding_gather(embedding, ids),
                      g.embedding_gather(positional, pos_ids));

  const float attn_scale = 1.0f / std::sqrt(float(hd));
  for (const auto& y : layers) {
    TensorPtr a = g.layer_norm(h, y.ln1_gain, y.ln1_bias, config.ln_eps);
    TensorPtr q = g.add_row_broadcast(g.matmul(a, y.wq), y.bq);
    TensorPtr k = g.add_row_broadcast(g.matmul(a, y.wk), y.bk);
    TensorPtr v = g.add_row_broadcast(g.matmul(a, y.wv), y.bv);
    std::vector<TensorPtr> ctx;
    ctx.reserve(size_t(heads));
    for (int head = 0; head < heads; ++head) {
      TensorPtr qh = g.slice_cols(q, head * hd, hd);
      TensorPtr kh = g.slice_cols(k, head * hd, hd);
      TensorPtr vh = g.slice_cols(v, head * hd, hd);
      TensorPtr scores = g.scale(g.matmul(qh, g.transpose(kh)), attn_scale);
      TensorPtr probs = g.softmax_rows(g.add_row_broadcast(scores, key_mask));
      ctx.push_back(g.matmul(probs, vh));
    }
    TensorPtr attn =
        g.add_row_broadcast(g.matmul(g.concat_cols(ctx), y.wo), y.bo);
    h = g.add(h, attn);

    TensorPtr f = g.layer_norm(h, y.ln2_gain, y.ln2_bias, config.ln_eps);
    TensorPtr ff = g.add_row_broadcast(
        g.matmul(g.gelu(g.add_row_broadcast(g.matmul(f, y.w_ff1), y.b_ff1)),
                 y.w_ff2),
        y.b_ff2);
    h = g.add(h, ff);
  }

  TensorPtr hidden = g.layer_norm(h, final_ln_gain, final_ln_bias,
                                  config.ln_eps);
  // Tied decoder: the embedding table is the output projection.
  TensorPtr logits = g.add_row_broadcast(
      g.matmul(hidden, g.transpose(embedding)), decoder_bias);
  return ForwardResult{hidden, logits};
}

TensorPtr ToyMlmModel::forward_logits(Graph& g,
                                      std::span<const int> ids) const {
  return forward_states(g, ids).logits;
}

void ToyMlmModel::set_trainable_all() { registry.set_all_trainable(true); }

void ToyMlmModel::set_trainable_rows_only(
    const std::vector<int>& embedding_rows) {
  registry.set_all_trainable(false);
  ParamEntry& e = registry.find("embedding");
  e.trainable = true;
  e.trainable_rows = embedding_rows;
  e.tensor->requires_grad = true;
  e.tensor->ensure_grad();
}

std::vector<float> ToyMlmModel::embedding_row(int id) const {
  const int d = config.d_model;
  if (id < 0 || id >= config.vocab_size) {
    throw IndexError("embedding_row: id out of range: " + std::to_string(id));
  }
  return std::vector<float>(embedding->data.begin() + size_t(id) * d,
                            embedding->data.begin() + size_t(id + 1) * d);
}

void ToyMlmModel::set_embedding_row(int id, std::span<const float> values) {
  const int d = config.d_model;
  if (int(values.size()) != d) {
    throw ValidationError("set_embedding_row: expected " + std::to_string(d) +
                          " values");
  }
  std::copy(values.begin(), values.end(),
            embedding->data.begin() + size_t(id) * d);
}

std::vector<std::vector<float>> ToyMlmModel::snapshot_params() const {
  std::vector<std::vector<float>> snap;
  snap.reserve(registry.entries().size());
  for (const auto& e : registry.entries()) snap.push_back(e.tensor->data);
  return snap;
}

void ToyMlmModel::restore_params(
    const std::vector<std::vector<float>>& snap) {
  if (snap.size() != registry.entries().size()) {
    throw ContractError("restore_params: snapshot does not match registry");
  }
  for (size_t i = 0; i < snap.size(); ++i) {
    if (snap[i].size() != registry.entries()[i].tensor->data.size()) {
      throw ContractError("restore_params: shape mismatch at " +
                          registry.entries()[i].name);
    }
    registry.entries()[i].tensor->data = snap[i];
  }
}

TensorPtr mlm_loss(Graph& g, const TensorPtr& logits,
                   std::span<const int> positions,
                   std::span<const int> targets) {
  if (positions.size() != targets.size() || positions.empty()) {
    throw ContractError("mlm_loss: positions/targets mismatch or empty");
  }
  TensorPtr probs = g.softmax_rows(logits);
  std::vector<std::pair<int, int>> rc(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    rc[i] = {positions[i], targets[i]};
  }
  return g.scale(g.mean_all(g.log_floor(g.pick(probs, rc))), -1.0f);
}

}  // namespace dart
