#include "escl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "escl/errors.hpp"

namespace escl {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
  }
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value.front() == '-') throw std::invalid_argument(value);
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a non-negative integer");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': '" + value + "' is not a boolean");
}

std::string real_text(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"batch_size", [](TrainConfig& c, auto& k, auto& v) { c.batch_size = parse_count(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.batch_size); }},
      {"steps", [](TrainConfig& c, auto& k, auto& v) { c.steps = parse_count(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.steps); }},
      {"learning_rate",
       [](TrainConfig& c, auto& k, auto& v) { c.optimizer.learning_rate = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.optimizer.learning_rate); }},
      {"optimizer", [](TrainConfig& c, auto&, auto& v) { c.optimizer.kind = parse_optimizer(v); },
       [](const TrainConfig& c) { return to_string(c.optimizer.kind); }},
      {"adam_beta1", [](TrainConfig& c, auto& k, auto& v) { c.optimizer.beta1 = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.optimizer.beta1); }},
      {"adam_beta2", [](TrainConfig& c, auto& k, auto& v) { c.optimizer.beta2 = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.optimizer.beta2); }},
      {"adam_epsilon",
       [](TrainConfig& c, auto& k, auto& v) { c.optimizer.epsilon = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.optimizer.epsilon); }},
      {"r_low", [](TrainConfig& c, auto& k, auto& v) { c.r_low.rate = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.r_low.rate); }},
      {"r_high", [](TrainConfig& c, auto& k, auto& v) { c.r_high.rate = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.r_high.rate); }},
      {"loss.temperature",
       [](TrainConfig& c, auto& k, auto& v) { c.loss.temperature = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.loss.temperature); }},
      {"loss.lambda", [](TrainConfig& c, auto& k, auto& v) { c.loss.lambda = parse_real(k, v); },
       [](const TrainConfig& c) { return real_text(c.loss.lambda); }},
      {"loss.variant", [](TrainConfig& c, auto&, auto& v) { c.loss.variant = parse_variant(v); },
       [](const TrainConfig& c) { return to_string(c.loss.variant); }},
      {"seed", [](TrainConfig& c, auto& k, auto& v) { c.seed = parse_count(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      {"eval_every", [](TrainConfig& c, auto& k, auto& v) { c.eval_every = parse_count(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.eval_every); }},
      {"checkpoint_path", [](TrainConfig& c, auto&, auto& v) { c.checkpoint_path = v; },
       [](const TrainConfig& c) { return c.checkpoint_path; }},
      {"embed_dim", [](TrainConfig& c, auto& k, auto& v) { c.embed_dim = parse_count(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.embed_dim); }},
      {"output_dim", [](TrainConfig& c, auto& k, auto& v) { c.output_dim = parse_count(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.output_dim); }},
      {"select_best_on_dev",
       [](TrainConfig& c, auto& k, auto& v) { c.select_best_on_dev = parse_bool(k, v); },
       [](const TrainConfig& c) { return std::string(c.select_best_on_dev ? "true" : "false"); }},
  };
  return table;
}

void check_finite(const LossBreakdown& b) {
  if (!std::isfinite(b.info_nce)) throw NumericError("training aborted: info_nce is not finite");
  if (!std::isfinite(b.equivariant)) {
    throw NumericError("training aborted: equivariant loss is not finite");
  }
  if (!std::isfinite(b.total)) throw NumericError("training aborted: total loss is not finite");
}

void check_finite(const EncoderGrads& g) {
  if (!g.token_embeddings.all_finite()) {
    throw NumericError("training aborted: token_embeddings gradient is not finite");
  }
  if (!g.projection_weight.all_finite()) {
    throw NumericError("training aborted: projection_weight gradient is not finite");
  }
  if (!g.projection_bias.all_finite()) {
    throw NumericError("training aborted: projection_bias gradient is not finite");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (embed_dim < 1 || output_dim < 1) throw ConfigError("embed_dim and output_dim must be positive");
  optimizer.validate();
  r_low.validate();
  r_high.validate();
  if (!(r_low.rate < r_high.rate)) throw ConfigError("r_low must be below r_high");
  loss.validate();
}

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void apply_config_override(TrainConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parse_train_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    apply_config_override(base, trim(content.substr(0, eq)), trim(content.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_train_config(buffer.str(), std::move(base));
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t corpus_size,
                                                   std::size_t batch_size, const RngStream& rng) {
  if (batch_size == 0) throw ConfigError("make_batches: batch size must be positive");
  if (corpus_size < batch_size) {
    throw ConfigError("corpus has " + std::to_string(corpus_size) +
                      " sentences, fewer than the batch size " + std::to_string(batch_size));
  }
  std::vector<std::size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream stream = rng;
  stream.shuffle(order);
  std::vector<std::vector<std::size_t>> batches(corpus_size / batch_size);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    batches[b].assign(order.begin() + static_cast<std::ptrdiff_t>(b * batch_size),
                      order.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size));
  }
  return batches;
}

BatchGradient compute_batch_gradient(const EncoderParams& params,
                                     std::span<const TokenSequence> batch,
                                     std::span<const std::uint64_t> sentence_keys,
                                     const TrainConfig& config, const RngStream& rng) {
  const ViewSample sample =
      sample_batch_views(params, batch, sentence_keys, config.r_low, config.r_high, rng);
  const EsclResult loss = escl_loss(sample.views, config.loss);

  BatchGradient out{loss.breakdown, EncoderGrads::zeros_like(params)};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    encode_backward(params, batch[i], sample.masks_h[i], sample.cache_h[i], loss.d_h.row(i),
                    out.grads);
    encode_backward(params, batch[i], sample.masks_pos[i], sample.cache_pos[i], loss.d_pos.row(i),
                    out.grads);
    encode_backward(params, batch[i], sample.masks_neg[i], sample.cache_neg[i], loss.d_neg.row(i),
                    out.grads);
  }
  return out;
}

StepOutcome train_step(EncoderParams params, std::span<const TokenSequence> batch,
                       std::span<const std::uint64_t> sentence_keys, const TrainConfig& config,
                       const RngStream& rng, OptimizerState optimizer) {
  BatchGradient g = compute_batch_gradient(params, batch, sentence_keys, config, rng);
  check_finite(g.breakdown);
  check_finite(g.grads);
  apply_update(params, g.grads, config.optimizer, optimizer);
  if (!params.token_embeddings.all_finite() || !params.projection_weight.all_finite() ||
      !params.projection_bias.all_finite()) {
    throw NumericError("training aborted: parameter update produced non-finite weights");
  }
  return {std::move(params), std::move(optimizer), g.breakdown};
}

void MetricTrace::append(StepRecord record) {
  if (!steps.empty() && record.step <= steps.back().step) {
    throw InputError("metric trace steps must increase");
  }
  steps.push_back(std::move(record));
}

std::string MetricTrace::to_jsonl() const {
  std::string out;
  for (const auto& r : steps) {
    nlohmann::json j = {{"step", r.step},
                        {"info_nce", r.breakdown.info_nce},
                        {"equivariant", r.breakdown.equivariant},
                        {"total", r.breakdown.total},
                        {"dist_pos", r.breakdown.dist_pos},
                        {"dist_neg", r.breakdown.dist_neg}};
    if (r.eval_rho) j["eval_rho"] = *r.eval_rho;
    out += j.dump() + "\n";
  }
  return out;
}

Trainer::Trainer(TrainConfig config, std::vector<TokenSequence> corpus, EncoderParams params,
                 OptimizerState optimizer, std::uint64_t start_step)
    : config_(std::move(config)),
      corpus_(std::move(corpus)),
      params_(std::move(params)),
      optimizer_(std::move(optimizer)),
      next_step_(start_step) {
  config_.validate();
  params_.validate();
  if (corpus_.size() < config_.batch_size) {
    throw ConfigError("corpus has " + std::to_string(corpus_.size()) +
                      " sentences, fewer than batch_size " + std::to_string(config_.batch_size));
  }
  batches_per_epoch_ = corpus_.size() / config_.batch_size;
}

const std::vector<std::size_t>& Trainer::batch_indices(std::uint64_t step) {
  const std::uint64_t epoch = step / batches_per_epoch_;
  if (epoch != cached_epoch_) {
    epoch_batches_ = make_batches(corpus_.size(), config_.batch_size,
                                  RngStream(config_.seed).derive("shuffle").derive(epoch));
    cached_epoch_ = epoch;
  }
  return epoch_batches_[step % batches_per_epoch_];
}

StepRecord Trainer::step() {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t step = next_step_;
  const auto& indices = batch_indices(step);
  std::vector<TokenSequence> batch;
  std::vector<std::uint64_t> keys;
  batch.reserve(indices.size());
  for (std::size_t index : indices) {
    batch.push_back(corpus_[index]);
    keys.push_back(index);
  }
  const RngStream masks = RngStream(config_.seed).derive("masks").derive(step);
  StepOutcome outcome = train_step(params_, batch, keys, config_, masks, optimizer_);
  params_ = std::move(outcome.params);
  optimizer_ = std::move(outcome.optimizer);
  ++next_step_;

  StepRecord record;
  record.step = step;
  record.breakdown = outcome.breakdown;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

EncoderParams initial_params(const TrainConfig& config, std::size_t vocab_size) {
  return init_params(vocab_size, config.embed_dim, config.output_dim,
                     RngStream(config.seed).derive("init"));
}

std::filesystem::path trace_path_for(const std::filesystem::path& checkpoint_path) {
  auto p = checkpoint_path;
  p += ".trace.jsonl";
  return p;
}

std::filesystem::path config_path_for(const std::filesystem::path& checkpoint_path) {
  auto p = checkpoint_path;
  p += ".config";
  return p;
}

TrainResult train(const TrainConfig& config, const std::vector<TokenSequence>& corpus,
                  const Vocabulary& vocab, std::span<const StsPair> eval_pairs,
                  std::optional<Checkpoint> start) {
  config.validate();
  EncoderParams params;
  OptimizerState optimizer;
  std::uint64_t first_step = 0;
  if (start) {
    if (start->vocab.size() != vocab.size()) {
      throw DimensionError("resume checkpoint vocabulary differs from the corpus vocabulary");
    }
    params = start->params;
    optimizer = start->optimizer.value_or(OptimizerState{});
    first_step = start->step;
  } else {
    params = initial_params(config, vocab.size());
  }
  if (params.config.embed_dim != config.embed_dim || params.config.output_dim != config.output_dim) {
    throw DimensionError("checkpoint dimensions differ from embed_dim/output_dim in the config");
  }

  const bool persist = !config.checkpoint_path.empty();
  const bool evaluating = !eval_pairs.empty();
  TrainResult result;
  if (evaluating) result.initial_eval = evaluate_sts(params, eval_pairs, "dev");

  Trainer trainer(config, corpus, std::move(params), std::move(optimizer), first_step);
  auto snapshot = [&] {
    return Checkpoint{trainer.params(), vocab, trainer.next_step(), trainer.optimizer()};
  };
  auto persist_all = [&](const Checkpoint& ck) {
    save_checkpoint(ck, config.checkpoint_path);
    write_file_atomic(trace_path_for(config.checkpoint_path), result.trace.to_jsonl());
  };

  std::optional<Checkpoint> best;
  double best_rho = -2.0;
  while (trainer.next_step() < config.steps) {
    StepRecord record = trainer.step();
    const bool last = trainer.next_step() >= config.steps;
    const bool due = config.eval_every > 0 && trainer.next_step() % config.eval_every == 0;
    if (evaluating && (due || last)) {
      record.eval_rho = evaluate_sts(trainer.params(), eval_pairs, "dev").rho;
      if (config.select_best_on_dev && *record.eval_rho > best_rho) {
        best_rho = *record.eval_rho;
        best = snapshot();
      }
    }
    result.trace.append(std::move(record));
    if (persist && due && !last) persist_all(snapshot());
  }

  result.checkpoint = best ? std::move(*best) : snapshot();
  if (evaluating) result.final_eval = evaluate_sts(result.checkpoint.params, eval_pairs, "dev");
  if (persist) persist_all(result.checkpoint);
  return result;
}

}  // namespace escl
