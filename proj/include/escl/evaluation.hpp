#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "escl/encoder.hpp"
#include "escl/numerics.hpp"
#include "escl/vocabulary.hpp"

namespace escl {

// One line of an STS file before tokenization.
struct StsText {
  std::string sentence_a;
  std::string sentence_b;
  double gold = 0.0;

  bool operator==(const StsText&) const = default;
};

struct StsPair {
  TokenSequence sentence_a;
  TokenSequence sentence_b;
  double gold = 0.0;
};

struct CorpusReport {
  std::vector<std::string> lines;
  // 1-based line numbers of blank lines that were skipped.
  std::vector<std::size_t> skipped_lines;
};

// One sentence per line; blank lines are skipped and reported.
CorpusReport read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<std::string>& lines);

// `sentence_a<TAB>sentence_b<TAB>score`, no header. Throws DataError with
// "<path>:<line>: <reason>" on the first malformed line.
std::vector<StsText> parse_sts(const std::string& text, const std::string& source_name);
std::vector<StsText> read_sts(const std::filesystem::path& path);
std::string format_sts(const std::vector<StsText>& pairs);
void write_sts(const std::filesystem::path& path, const std::vector<StsText>& pairs);

std::vector<TokenSequence> tokenize_corpus(const std::vector<std::string>& lines,
                                           const Vocabulary& vocab);
std::vector<StsPair> tokenize_pairs(const std::vector<StsText>& pairs, const Vocabulary& vocab);

struct EvalResult {
  std::string dataset;
  double rho = 0.0;
  std::size_t n_pairs = 0;
};

// Cosine similarity of each pair under the dropout-free encoder, ranked
// against gold with Spearman's rho. Throws DegenerateInputError naming the
// dataset when gold scores or predicted similarities are constant.
EvalResult evaluate_sts(const EncoderParams& params, std::span<const StsPair> pairs,
                        const std::string& dataset = "sts");

// Mean and sample standard deviation (0 for a single value).
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
};
Summary summarize(std::span<const double> values);

// Desk-scale stand-in for STS corpora. Words are grouped into synonym
// classes named "c<class>s<member>". Training sentences draw a few classes
// and emit two distinct synonyms of each; an evaluation pair shares k of its
// `sentence_classes` classes, always through different synonyms, so its
// gold score k / sentence_classes is invisible to exact token matching.
struct SyntheticData {
  std::size_t class_count = 0;
  std::size_t sentence_classes = 0;
  std::vector<std::string> corpus;
  std::vector<StsText> pairs;
  // Synonym class of every generated word.
  std::map<std::string, std::size_t> word_class;
};

// vocab_size counts the two reserved ids; vocab_size - 2 words are generated.
SyntheticData generate_synthetic_corpus(std::uint64_t gen_seed, std::size_t n_train,
                                        std::size_t n_pairs, std::size_t vocab_size);

struct ProbePoint {
  double rate = 0.0;
  double mean_drift = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// For each rate, mean over sentences and trials of
// 1 - sim(f(x, rate 0), f(x, rate, m)).
std::vector<ProbePoint> sensitivity_probe(const EncoderParams& params,
                                          std::span<const TokenSequence> sentences,
                                          std::span<const DropoutSpec> rates, std::size_t trials,
                                          const RngStream& rng);

}  // namespace escl
