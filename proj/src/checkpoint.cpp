#include "dart/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dart/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace dart {

using nlohmann::json;

namespace {

json spec_to_json(const PromptSpec& spec) {
  return json{{"m", spec.m},
              {"n", spec.n},
              {"template_slot_ids", spec.template_slot_ids},
              {"label_slot_ids", spec.label_slot_ids},
              {"mask_index", spec.mask_index},
              {"layout", spec.layout}};
}

PromptSpec spec_from_json(const json& j) {
  PromptSpec spec;
  spec.m = j.at("m").get<int>();
  spec.n = j.at("n").get<int>();
  spec.template_slot_ids = j.at("template_slot_ids").get<std::vector<int>>();
  spec.label_slot_ids = j.at("label_slot_ids").get<std::vector<int>>();
  spec.mask_index = j.at("mask_index").get<int>();
  spec.layout = j.at("layout").get<std::string>();
  return spec;
}

}  // namespace

void save_checkpoint(const std::string& path, const ToyMlmModel& model,
                     const std::optional<PromptSpec>& spec) {
  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = {{"vocab_size", model.config.vocab_size},
                        {"d_model", model.config.d_model},
                        {"n_layers", model.config.n_layers},
                        {"n_heads", model.config.n_heads},
                        {"l_max", model.config.l_max}};
  manifest["vocab"] = {{"tokens", model.vocab.tokens},
                       {"reserved_begin", model.vocab.reserved_begin},
                       {"reserved_end", model.vocab.reserved_end}};
  json params = json::array();
  uint64_t offset = 0;
  for (const auto& e : model.registry.entries()) {
    params.push_back({{"name", e.name},
                      {"shape", e.tensor->shape},
                      {"offset", offset}});
    offset += uint64_t(e.tensor->data.size()) * sizeof(float);
  }
  manifest["params"] = params;
  if (spec) manifest["prompt_spec"] = spec_to_json(*spec);

  const std::string text = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), std::streamsize(text.size()));
  for (const auto& e : model.registry.entries()) {
    out.write(reinterpret_cast<const char*>(e.tensor->data.data()),
              std::streamsize(e.tensor->data.size() * sizeof(float)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ArtifactError("not a checkpoint file: " + path);
  }
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), std::streamsize(len));
  if (!in) throw ArtifactError("truncated checkpoint manifest: " + path);

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw ArtifactError("bad checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.at("format_version").get<int>() != 1) {
    throw ArtifactError("unsupported checkpoint format version");
  }

  const auto& jc = manifest.at("config");
  ModelConfig config;
  config.vocab_size = jc.at("vocab_size").get<int>();
  config.d_model = jc.at("d_model").get<int>();
  config.n_layers = jc.at("n_layers").get<int>();
  config.n_heads = jc.at("n_heads").get<int>();
  config.l_max = jc.at("l_max").get<int>();

  const auto& jv = manifest.at("vocab");
  Vocabulary vocab;
  vocab.tokens = jv.at("tokens").get<std::vector<std::string>>();
  vocab.reserved_begin = jv.at("reserved_begin").get<int>();
  vocab.reserved_end = jv.at("reserved_end").get<int>();
  for (size_t i = 0; i < vocab.tokens.size(); ++i) {
    vocab.index.emplace(vocab.tokens[i], int(i));
  }
  auto unk = vocab.index.find("[unk]");
  vocab.unk_id = unk == vocab.index.end() ? -1 : unk->second;
  if (int(vocab.tokens.size()) != config.vocab_size) {
    throw ArtifactError("vocabulary size disagrees with model config");
  }

  // init() builds tensors of the right shapes; stored data overwrites them.
  Rng scratch(0);
  LoadedCheckpoint loaded{ToyMlmModel::init(config, std::move(vocab), scratch),
                          std::nullopt};
  ToyMlmModel& model = loaded.model;

  const auto& jp = manifest.at("params");
  if (jp.size() != model.registry.entries().size()) {
    throw ArtifactError("checkpoint parameter count mismatch");
  }
  for (size_t i = 0; i < jp.size(); ++i) {
    auto& e = model.registry.entries()[i];
    const auto& entry = jp[i];
    if (entry.at("name").get<std::string>() != e.name) {
      throw ArtifactError("checkpoint parameter order mismatch at " + e.name);
    }
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != e.tensor->shape) {
      throw ArtifactError("checkpoint shape mismatch for " + e.name);
    }
    in.read(reinterpret_cast<char*>(e.tensor->data.data()),
            std::streamsize(e.tensor->data.size() * sizeof(float)));
    if (!in) throw ArtifactError("truncated checkpoint data at " + e.name);
  }
  if (manifest.contains("prompt_spec")) {
    loaded.prompt_spec = spec_from_json(manifest.at("prompt_spec"));
  }
  return loaded;
}

}  // namespace dart
