#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "escl/encoder.hpp"

namespace escl {

// Whitespace vocabulary. Id 0 is a reserved padding sentinel that never
// appears in tokenized output and id 1 is the unknown token; words get ids
// from 2 upwards in first-occurrence order.
class Vocabulary {
 public:
  static constexpr std::int64_t kPadId = 0;
  static constexpr std::int64_t kUnkId = 1;
  static constexpr std::size_t kReserved = 2;

  Vocabulary() = default;

  // Adds the word if missing and returns its id.
  std::int64_t add(std::string_view word);
  std::optional<std::int64_t> find(std::string_view word) const;
  const std::string& word(std::int64_t id) const;

  // Total ids including the reserved ones.
  std::size_t size() const { return kReserved + words_.size(); }
  // Non-reserved words in id order.
  const std::vector<std::string>& words() const { return words_; }

  static Vocabulary from_words(const std::vector<std::string>& words);

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int64_t> index_;
};

// Lowercased whitespace split. Empty when the line has no tokens.
std::vector<std::string> split_words(std::string_view line);

// Builds a vocabulary over every non-empty line. Throws InputError if no line
// contains a token.
Vocabulary build_vocab(const std::vector<std::string>& lines);

// Unknown words map to Vocabulary::kUnkId. Throws InputError on a line with
// no tokens.
TokenSequence tokenize(std::string_view line, const Vocabulary& vocab);

}  // namespace escl
