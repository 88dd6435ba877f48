#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "escl/errors.hpp"
#include "escl/evaluation.hpp"

using namespace escl;

namespace {

// Oracle score: number of synonym classes two sentences share.
double class_overlap(const SyntheticData& data, const std::string& a, const std::string& b) {
  std::set<std::size_t> ca, cb;
  for (const auto& w : split_words(a)) ca.insert(data.word_class.at(w));
  for (const auto& w : split_words(b)) cb.insert(data.word_class.at(w));
  double shared = 0;
  for (auto c : ca) shared += cb.count(c);
  return shared;
}

}  // namespace

TEST_CASE("vocabulary lowercases and deduplicates") {
  const auto v = build_vocab({"A a A"});
  CHECK(v.size() == Vocabulary::kReserved + 1);
  CHECK(v.words() == std::vector<std::string>{"a"});
  CHECK(v.find("a") == std::int64_t{2});
  CHECK(tokenize("a A", v).token_ids == std::vector<std::int64_t>{2, 2});
}

TEST_CASE("empty vocabulary maps every word to unk") {
  const Vocabulary v;
  CHECK(tokenize("x y z", v).token_ids ==
        std::vector<std::int64_t>(3, Vocabulary::kUnkId));
  CHECK_THROWS_AS(tokenize("   ", v), InputError);
}

TEST_CASE("vocabulary round-trips through its word list") {
  const std::vector<std::string> lines{"the cat sat", "a dog ran", "The Cat ran far"};
  const auto v = build_vocab(lines);
  const auto again = Vocabulary::from_words(v.words());
  CHECK(again == v);
  CHECK(tokenize_corpus(lines, again) == tokenize_corpus(lines, v));
  CHECK_THROWS_AS(Vocabulary::from_words({"a", "a"}), DataError);
}

TEST_CASE("sts text parses and formats back") {
  const std::string text = "a b\tc d\t0.5\nx\ty\t1\n";
  const auto pairs = parse_sts(text, "mem");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == StsText{"a b", "c d", 0.5});
  CHECK(parse_sts(format_sts(pairs), "mem") == pairs);
}

TEST_CASE("malformed sts lines report their line number") {
  const auto message = [](const std::string& text) {
    try {
      parse_sts(text, "dev.tsv");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("a\tb\t1\na\tb\n").find("dev.tsv:2:") == 0);
  CHECK(message("a\tb\t1\na\tb\t1\na\tb\tmuch\n").find("dev.tsv:3:") == 0);
  CHECK(message("\tb\t1\n").find("dev.tsv:1:") == 0);
  CHECK(message("a\tb\tnan\n").find("dev.tsv:1:") == 0);
}

TEST_CASE("corpus files skip and report blank lines") {
  const auto path = std::filesystem::temp_directory_path() / "escl_corpus_test.txt";
  write_corpus(path, {"one two", "three"});
  auto report = read_corpus(path);
  CHECK(report.lines == std::vector<std::string>{"one two", "three"});
  CHECK(report.skipped_lines.empty());
  {
    std::ofstream out(path);
    out << "one\n\n   \ntwo\n";
  }
  report = read_corpus(path);
  CHECK(report.lines.size() == 2);
  CHECK(report.skipped_lines == std::vector<std::size_t>{2, 3});
  std::filesystem::remove(path);
}

TEST_CASE("evaluation of hand-built pairs") {
  EncoderParams p;
  p.config = {5, 2, 2};
  p.token_embeddings = Tensor({5, 2}, {0, 0, 0, 0, 1, 0, 0, 1, 1, 0.2});
  p.projection_weight = Tensor({2, 2}, {1, 0, 0, 1});
  p.projection_bias = Tensor({2});
  // Pair 0 is near-identical, pair 1 orthogonal; gold agrees.
  const std::vector<StsPair> pairs{{TokenSequence{{2}}, TokenSequence{{4}}, 0.9},
                                   {TokenSequence{{2}}, TokenSequence{{3}}, 0.1}};
  const auto r = evaluate_sts(p, pairs, "tiny");
  CHECK(r.rho == doctest::Approx(1.0));
  CHECK(r.n_pairs == 2);
  CHECK(r.dataset == "tiny");

  const std::vector<StsPair> same{{TokenSequence{{2}}, TokenSequence{{2}}, 0.1},
                                  {TokenSequence{{3}}, TokenSequence{{3}}, 0.5},
                                  {TokenSequence{{4}}, TokenSequence{{4}}, 0.9}};
  try {
    evaluate_sts(p, same, "mirror");
    FAIL("expected an error");
  } catch (const DegenerateInputError& e) {
    CHECK(std::string(e.what()).find("mirror") != std::string::npos);
  }
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{1, 2, 3, 10};
  const auto s = summarize(v);
  CHECK(s.mean == 4.0);
  CHECK(s.median == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(50.0 / 3.0)));
}

TEST_CASE("generated corpus is valid and deterministic") {
  const auto data = generate_synthetic_corpus(3, 512, 256, 200);
  CHECK(data.corpus.size() == 512);
  CHECK(data.pairs.size() == 256);
  CHECK(data.word_class.size() == 198);
  const auto vocab = build_vocab(data.corpus);
  CHECK(vocab.size() == 200);
  for (const auto& pair : data.pairs) {
    CHECK(split_words(pair.sentence_a).size() == data.sentence_classes);
    CHECK(pair.gold >= 0.0);
    CHECK(pair.gold <= 1.0);
  }
  const auto again = generate_synthetic_corpus(3, 512, 256, 200);
  CHECK(again.corpus == data.corpus);
  CHECK(again.pairs == data.pairs);
  CHECK_THROWS_AS(generate_synthetic_corpus(3, 10, 0, 200), ConfigError);
}

TEST_CASE("overlap extremes of generated pairs") {
  const auto data = generate_synthetic_corpus(4, 64, 60, 200);
  bool saw_full = false, saw_none = false;
  for (const auto& pair : data.pairs) {
    const auto a = split_words(pair.sentence_a), b = split_words(pair.sentence_b);
    // Shared meaning never shows up as a shared token.
    for (const auto& w : a) CHECK(std::find(b.begin(), b.end(), w) == b.end());
    const double overlap = class_overlap(data, pair.sentence_a, pair.sentence_b);
    if (pair.gold == 1.0) {
      saw_full = true;
      CHECK(overlap == static_cast<double>(data.sentence_classes));
    }
    if (pair.gold == 0.0) {
      saw_none = true;
      CHECK(overlap == 0.0);
    }
  }
  CHECK(saw_full);
  CHECK(saw_none);
}

TEST_CASE("class-overlap oracle ranks generated pairs like gold") {
  const auto data = generate_synthetic_corpus(1, 512, 256, 200);
  std::vector<double> oracle_scores, gold;
  for (const auto& pair : data.pairs) {
    oracle_scores.push_back(class_overlap(data, pair.sentence_a, pair.sentence_b));
    gold.push_back(pair.gold);
  }
  CHECK(spearman_rho(oracle_scores, gold) >= 0.9);
}

TEST_CASE("untrained encoders score near zero") {
  const auto data = generate_synthetic_corpus(1, 512, 256, 200);
  const auto vocab = build_vocab(data.corpus);
  const auto pairs = tokenize_pairs(data.pairs, vocab);
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = init_params(vocab.size(), 32, 32, RngStream(seed).derive("init"));
    total += evaluate_sts(p, pairs).rho;
  }
  CHECK(std::abs(total / 10) < 0.15);
}

TEST_CASE("sensitivity probe") {
  const auto p = init_params(30, 16, 16, RngStream(2));
  std::vector<TokenSequence> sentences;
  RngStream rng(3);
  for (int s = 0; s < 20; ++s) {
    TokenSequence x;
    for (int t = 0; t < 5; ++t) x.token_ids.push_back(2 + static_cast<std::int64_t>(rng.next_below(28)));
    sentences.push_back(x);
  }
  const std::vector<DropoutSpec> rates{{0.0}, {0.1}, {0.45}};
  const auto curve = sensitivity_probe(p, sentences, rates, 100, RngStream(4));
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].mean_drift == 0.0);
  CHECK(curve[2].mean_drift > curve[1].mean_drift);
  CHECK(curve[1].samples == 2000);

  const auto more = sensitivity_probe(p, sentences, rates, 200, RngStream(5));
  for (std::size_t r = 1; r < 3; ++r) {
    const double se = std::hypot(curve[r].std_error, more[r].std_error);
    CHECK(std::abs(curve[r].mean_drift - more[r].mean_drift) < 2 * se);
  }

  const std::vector<DropoutSpec> unsorted{{0.3}, {0.1}};
  CHECK_THROWS_AS(sensitivity_probe(p, sentences, unsorted, 100, RngStream(4)), ConfigError);
  CHECK_THROWS_AS(sensitivity_probe(p, sentences, rates, 5, RngStream(4)), ConfigError);
}
