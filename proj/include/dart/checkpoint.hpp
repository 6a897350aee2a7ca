#pragma once

#include <optional>
#include <string>

#include "dart/model.hpp"
#include "dart/prompt.hpp"

namespace dart {

// Single-file checkpoint: 8-byte magic, uint64 LE manifest length, JSON
// manifest (format version, model config, vocabulary, parameter
// names/shapes/offsets, optional prompt spec), then the raw little-endian
// float32 parameter data in manifest order.
inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'R', 'T',
                                             'C', 'K', 'P', '1'};

void save_checkpoint(const std::string& path, const ToyMlmModel& model,
                     const std::optional<PromptSpec>& spec = std::nullopt);

struct LoadedCheckpoint {
  ToyMlmModel model;
  std::optional<PromptSpec> prompt_spec;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace dart
