#include "escl/vocabulary.hpp"

#include <cctype>

#include "escl/errors.hpp"

namespace escl {

std::int64_t Vocabulary::add(std::string_view word) {
  if (auto id = find(word)) return *id;
  const auto id = static_cast<std::int64_t>(size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

std::optional<std::int64_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::word(std::int64_t id) const {
  static const std::string kPad = "<pad>";
  static const std::string kUnk = "<unk>";
  if (id == kPadId) return kPad;
  if (id == kUnkId) return kUnk;
  return words_.at(static_cast<std::size_t>(id) - kReserved);
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary vocab;
  for (const auto& w : words) {
    if (vocab.find(w)) throw DataError("duplicate vocabulary entry '" + w + "'");
    vocab.add(w);
  }
  return vocab;
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::string current;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary build_vocab(const std::vector<std::string>& lines) {
  Vocabulary vocab;
  bool any = false;
  for (const auto& line : lines) {
    for (const auto& w : split_words(line)) {
      vocab.add(w);
      any = true;
    }
  }
  if (!any) throw InputError("build_vocab: corpus contains no tokens");
  return vocab;
}

TokenSequence tokenize(std::string_view line, const Vocabulary& vocab) {
  TokenSequence seq;
  for (const auto& w : split_words(line)) {
    seq.token_ids.push_back(vocab.find(w).value_or(Vocabulary::kUnkId));
  }
  if (seq.token_ids.empty()) throw InputError("tokenize: empty line");
  return seq;
}

}  // namespace escl
