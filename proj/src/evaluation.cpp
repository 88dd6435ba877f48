#include "escl/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "escl/checkpoint.hpp"
#include "escl/errors.hpp"

namespace escl {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string word_name(std::size_t cls, std::size_t member) {
  return "c" + std::to_string(cls) + "s" + std::to_string(member);
}

}  // namespace

CorpusReport read_corpus(const std::filesystem::path& path) {
  CorpusReport report;
  const auto lines = split_lines(read_text(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) {
      report.skipped_lines.push_back(i + 1);
    } else {
      report.lines.push_back(lines[i]);
    }
  }
  if (report.lines.empty()) throw DataError("corpus " + path.string() + " has no sentences");
  return report;
}

void write_corpus(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& line : lines) text += line + "\n";
  write_file_atomic(path, text);
}

std::vector<StsText> parse_sts(const std::string& text, const std::string& source_name) {
  std::vector<StsText> pairs;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = source_name + ":" + std::to_string(i + 1) + ": ";
    const std::string& line = lines[i];
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw DataError(where + "expected 3 tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    if (is_blank(fields[0]) || is_blank(fields[1])) throw DataError(where + "empty sentence");
    double score = 0.0;
    const std::string& s = fields[2];
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(score)) {
      throw DataError(where + "score '" + s + "' is not a finite number");
    }
    pairs.push_back({fields[0], fields[1], score});
  }
  return pairs;
}

std::vector<StsText> read_sts(const std::filesystem::path& path) {
  return parse_sts(read_text(path), path.string());
}

std::string format_sts(const std::vector<StsText>& pairs) {
  std::string text;
  for (const auto& p : pairs) {
    if (p.sentence_a.find_first_of("\t\n") != std::string::npos ||
        p.sentence_b.find_first_of("\t\n") != std::string::npos) {
      throw InputError("STS sentences may not contain tabs or newlines");
    }
    text += p.sentence_a + "\t" + p.sentence_b + "\t" + format_double(p.gold) + "\n";
  }
  return text;
}

void write_sts(const std::filesystem::path& path, const std::vector<StsText>& pairs) {
  write_file_atomic(path, format_sts(pairs));
}

std::vector<TokenSequence> tokenize_corpus(const std::vector<std::string>& lines,
                                           const Vocabulary& vocab) {
  std::vector<TokenSequence> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(tokenize(line, vocab));
  return out;
}

std::vector<StsPair> tokenize_pairs(const std::vector<StsText>& pairs, const Vocabulary& vocab) {
  std::vector<StsPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({tokenize(p.sentence_a, vocab), tokenize(p.sentence_b, vocab), p.gold});
  }
  return out;
}

EvalResult evaluate_sts(const EncoderParams& params, std::span<const StsPair> pairs,
                        const std::string& dataset) {
  if (pairs.size() < 2) {
    throw InputError("dataset '" + dataset + "' needs at least 2 pairs, has " +
                     std::to_string(pairs.size()));
  }
  std::vector<double> predicted, gold;
  predicted.reserve(pairs.size());
  gold.reserve(pairs.size());
  for (const auto& pair : pairs) {
    predicted.push_back(cosine_similarity(encode_inference(params, pair.sentence_a),
                                          encode_inference(params, pair.sentence_b)));
    gold.push_back(pair.gold);
  }
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(gold)) {
    throw DegenerateInputError("dataset '" + dataset + "': gold scores are all equal");
  }
  if (constant(predicted)) {
    throw DegenerateInputError("dataset '" + dataset +
                               "': predicted similarities are all equal, rho is undefined");
  }
  return EvalResult{dataset, spearman_rho(predicted, gold), pairs.size()};
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw InputError("summarize: no values");
  Summary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

SyntheticData generate_synthetic_corpus(std::uint64_t gen_seed, std::size_t n_train,
                                        std::size_t n_pairs, std::size_t vocab_size) {
  if (n_train == 0 || n_pairs == 0) throw ConfigError("n_train and n_pairs must be at least 1");
  if (vocab_size < 20) throw ConfigError("vocab_size must be at least 20");

  const std::size_t n_words = vocab_size - Vocabulary::kReserved;
  const std::size_t class_size = n_words >= 40 ? 4 : 2;
  SyntheticData data;
  data.class_count = n_words / class_size;
  data.sentence_classes = std::min<std::size_t>(5, data.class_count / 2);

  // Leftover words join the first classes so every word has a class.
  std::vector<std::vector<std::string>> members(data.class_count);
  for (std::size_t w = 0; w < n_words; ++w) {
    const std::size_t cls = w % data.class_count;
    const std::string name = word_name(cls, members[cls].size());
    members[cls].push_back(name);
    data.word_class.emplace(name, cls);
  }

  const RngStream root(gen_seed);
  const auto pick_classes = [&](RngStream& rng, std::size_t count, const std::set<std::size_t>& exclude) {
    std::vector<std::size_t> pool;
    for (std::size_t c = 0; c < data.class_count; ++c) {
      if (!exclude.count(c)) pool.push_back(c);
    }
    rng.shuffle(pool);
    pool.resize(count);
    return pool;
  };
  const auto two_members = [&](RngStream& rng, std::size_t cls) {
    std::vector<std::string> pool = members[cls];
    rng.shuffle(pool);
    pool.resize(2);
    return pool;
  };

  // Training sentences: 2-4 classes, two distinct synonyms each.
  std::vector<std::vector<std::string>> sentences(n_train);
  for (std::size_t s = 0; s < n_train; ++s) {
    RngStream rng = root.derive("train").derive(s);
    const std::size_t n_classes = 2 + rng.next_below(3);
    for (std::size_t cls : pick_classes(rng, n_classes, {})) {
      for (auto& w : two_members(rng, cls)) sentences[s].push_back(std::move(w));
    }
    rng.shuffle(sentences[s]);
  }

  // Make every word appear at least once by swapping it in for a synonym
  // that occurs elsewhere too.
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++counts[w];
  }
  for (std::size_t cls = 0; cls < data.class_count; ++cls) {
    for (const auto& word : members[cls]) {
      if (counts[word] > 0) continue;
      bool placed = false;
      for (std::size_t s = 0; s < sentences.size() && !placed; ++s) {
        auto& sent = sentences[s];
        if (std::find(sent.begin(), sent.end(), word) != sent.end()) continue;
        for (auto& w : sent) {
          if (data.word_class.at(w) == cls && counts[w] > 1) {
            --counts[w];
            w = word;
            ++counts[word];
            placed = true;
            break;
          }
        }
      }
    }
  }
  for (const auto& s : sentences) {
    std::string line;
    for (const auto& w : s) line += (line.empty() ? "" : " ") + w;
    data.corpus.push_back(std::move(line));
  }

  // Evaluation pairs cycle through every overlap level k = 0..m.
  const std::size_t m = data.sentence_classes;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    RngStream rng = root.derive("pairs").derive(p);
    const std::size_t shared = p % (m + 1);
    const auto classes_a = pick_classes(rng, m, {});
    const std::set<std::size_t> used(classes_a.begin(), classes_a.end());
    const auto fresh = pick_classes(rng, m - shared, used);

    std::vector<std::string> a, b;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t cls = classes_a[k];
      auto pair_words = two_members(rng, cls);
      a.push_back(pair_words[0]);
      if (k < shared) {
        b.push_back(pair_words[1]);
      } else {
        const std::size_t other = fresh[k - shared];
        b.push_back(members[other][rng.next_below(members[other].size())]);
      }
    }
    const auto join = [](const std::vector<std::string>& words) {
      std::string line;
      for (const auto& w : words) line += (line.empty() ? "" : " ") + w;
      return line;
    };
    data.pairs.push_back({join(a), join(b), static_cast<double>(shared) / static_cast<double>(m)});
  }
  root.derive("pair_order").derive(0).shuffle(data.pairs);
  return data;
}

std::vector<ProbePoint> sensitivity_probe(const EncoderParams& params,
                                          std::span<const TokenSequence> sentences,
                                          std::span<const DropoutSpec> rates, std::size_t trials,
                                          const RngStream& rng) {
  if (sentences.empty()) throw InputError("sensitivity_probe: no sentences");
  if (trials < 10) throw ConfigError("sensitivity_probe: trials must be at least 10");
  for (std::size_t r = 0; r < rates.size(); ++r) {
    rates[r].validate();
    if (r > 0 && rates[r].rate < rates[r - 1].rate) {
      throw ConfigError("sensitivity_probe: rates must be sorted ascending");
    }
  }

  std::vector<std::vector<double>> clean;
  clean.reserve(sentences.size());
  for (const auto& x : sentences) clean.push_back(encode_inference(params, x));

  std::vector<ProbePoint> curve;
  for (std::size_t r = 0; r < rates.size(); ++r) {
    const DropoutSpec spec = rates[r];
    std::vector<double> drifts;
    drifts.reserve(sentences.size() * trials);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      for (std::size_t t = 0; t < trials; ++t) {
        const RngStream stream = rng.derive(r).derive(s).derive(t);
        const DropoutMask mask =
            sample_dropout_mask({sentences[s].size(), params.config.embed_dim}, spec, stream);
        drifts.push_back(1.0 - cosine_similarity(clean[s], encode(params, sentences[s], spec, mask)));
      }
    }
    const Summary summary = summarize(drifts);
    curve.push_back({spec.rate, summary.mean,
                     summary.std / std::sqrt(static_cast<double>(drifts.size())), drifts.size()});
  }
  return curve;
}

}  // namespace escl
