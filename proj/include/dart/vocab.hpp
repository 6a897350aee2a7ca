#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dart {

// Token <-> id map. Fixed layout: [PAD]=0, [CLS]=1, [SEP]=2, [MASK]=3,
// natural tokens next, reserved ("[unused*]") tokens occupy the final ids.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;
  int pad_id = 0;
  int cls_id = 1;
  int sep_id = 2;
  int mask_id = 3;
  int reserved_begin = 0;  // [reserved_begin, reserved_end)
  int reserved_end = 0;
  int unk_id = -1;  // id of "[unk]" when present among natural tokens

  int size() const { return int(tokens.size()); }
  int reserved_count() const { return reserved_end - reserved_begin; }
  bool is_special(int id) const { return id >= 0 && id < 4; }
  bool is_reserved(int id) const {
    return id >= reserved_begin && id < reserved_end;
  }
  bool is_natural(int id) const {
    return id >= 4 && id < reserved_begin;
  }
  int id_of(std::string_view token) const;
  const std::string& token_of(int id) const;
};

Vocabulary build_vocab(const std::vector<std::string>& natural_tokens,
                       int reserved_count);

// Whitespace tokenizer: lowercases, unknown words map to "[unk]".
std::vector<int> encode(const Vocabulary& vocab, std::string_view text);
std::string decode(const Vocabulary& vocab, const std::vector<int>& ids);

}  // namespace dart
