#include "dart/vocab.hpp"

#include <algorithm>
#include <cctype>

#include "dart/errors.hpp"

namespace dart {

int Vocabulary::id_of(std::string_view token) const {
  auto it = index.find(std::string(token));
  if (it == index.end()) {
    throw ValidationError("token not in vocabulary: " + std::string(token));
  }
  return it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("token id out of range: " + std::to_string(id));
  }
  return tokens[size_t(id)];
}

Vocabulary build_vocab(const std::vector<std::string>& natural_tokens,
                       int reserved_count) {
  if (reserved_count < 1) {
    throw ValidationError(
        "reserved_count must be >= 1 (reserved slots hold the trainable "
        "prompt rows)");
  }
  Vocabulary v;
  v.tokens = {"[PAD]", "[CLS]", "[SEP]", "[MASK]"};
  for (const auto& t : natural_tokens) {
    if (v.index.count(t) || std::find(v.tokens.begin(), v.tokens.end(), t) !=
                                v.tokens.end()) {
      throw ValidationError("duplicate natural token: " + t);
    }
    v.index.emplace(t, int(v.tokens.size()));
    v.tokens.push_back(t);
  }
  v.reserved_begin = int(v.tokens.size());
  for (int i = 1; i <= reserved_count; ++i) {
    std::string t = "[unused" + std::to_string(i) + "]";
    v.index.emplace(t, int(v.tokens.size()));
    v.tokens.push_back(std::move(t));
  }
  v.reserved_end = int(v.tokens.size());
  v.index.emplace("[PAD]", 0);
  v.index.emplace("[CLS]", 1);
  v.index.emplace("[SEP]", 2);
  v.index.emplace("[MASK]", 3);
  auto unk = v.index.find("[unk]");
  v.unk_id = unk == v.index.end() ? -1 : unk->second;
  return v;
}

std::vector<int> encode(const Vocabulary& vocab, std::string_view text) {
  std::vector<int> ids;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    auto it = vocab.index.find(word);
    if (it != vocab.index.end()) {
      ids.push_back(it->second);
    } else if (vocab.unk_id >= 0) {
      ids.push_back(vocab.unk_id);
    } else {
      throw ValidationError("unknown word '" + word +
                            "' and vocabulary has no [unk] token");
    }
    word.clear();
  };
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else {
      word.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  flush();
  return ids;
}

std::string decode(const Vocabulary& vocab, const std::vector<int>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token_of(ids[i]);
  }
  return out;
}

}  // namespace dart
