#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "escl/checkpoint.hpp"
#include "escl/encoder.hpp"
#include "escl/evaluation.hpp"
#include "escl/losses.hpp"
#include "escl/optimizer.hpp"

namespace escl {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t steps = 200;
  OptimizerSettings optimizer;
  DropoutSpec r_low{0.1};
  DropoutSpec r_high{0.45};
  LossConfig loss;
  std::uint64_t seed = 1;
  std::size_t eval_every = 50;
  std::string checkpoint_path = "escl.ckpt";
  std::size_t embed_dim = 32;
  std::size_t output_dim = 32;
  // Keep the snapshot with the best dev rho instead of the final weights.
  bool select_best_on_dev = false;

  void validate() const;
};

// Flat `key = value` text, one entry per line, '#' starts a comment.
// Unknown keys raise ConfigError naming the key.
TrainConfig parse_train_config(const std::string& text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
void apply_config_override(TrainConfig& config, const std::string& key, const std::string& value);
std::string format_train_config(const TrainConfig& config);
const std::vector<std::string>& train_config_keys();

// Shuffles sentence indices and cuts them into full batches of
// `batch_size`; the trailing partial batch is dropped.
std::vector<std::vector<std::size_t>> make_batches(std::size_t corpus_size,
                                                   std::size_t batch_size, const RngStream& rng);

// Loss and parameter gradient for one batch with masks drawn from `rng`.
struct BatchGradient {
  LossBreakdown breakdown;
  EncoderGrads grads;
};

BatchGradient compute_batch_gradient(const EncoderParams& params,
                                     std::span<const TokenSequence> batch,
                                     std::span<const std::uint64_t> sentence_keys,
                                     const TrainConfig& config, const RngStream& rng);

struct StepOutcome {
  EncoderParams params;
  OptimizerState optimizer;
  LossBreakdown breakdown;
};

// One forward/backward/update. Throws NumericError naming the offending term
// when the loss or gradient is not finite.
StepOutcome train_step(EncoderParams params, std::span<const TokenSequence> batch,
                       std::span<const std::uint64_t> sentence_keys, const TrainConfig& config,
                       const RngStream& rng, OptimizerState optimizer);

struct StepRecord {
  std::uint64_t step = 0;
  LossBreakdown breakdown;
  double wall_seconds = 0.0;
  std::optional<double> eval_rho;
};

struct MetricTrace {
  std::vector<StepRecord> steps;

  void append(StepRecord record);
  // One JSON object per step; wall time is left out so traces of identical
  // runs compare byte-for-byte.
  std::string to_jsonl() const;
};

// Streams every mask and batch order from (config.seed, step), so a run can
// stop after any step and resume to the identical trajectory.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<TokenSequence> corpus, EncoderParams params,
          OptimizerState optimizer = {}, std::uint64_t start_step = 0);

  StepRecord step();

  const EncoderParams& params() const { return params_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  std::uint64_t next_step() const { return next_step_; }
  std::size_t batches_per_epoch() const { return batches_per_epoch_; }

 private:
  const std::vector<std::size_t>& batch_indices(std::uint64_t step);

  TrainConfig config_;
  std::vector<TokenSequence> corpus_;
  EncoderParams params_;
  OptimizerState optimizer_;
  std::uint64_t next_step_;
  std::size_t batches_per_epoch_;
  std::uint64_t cached_epoch_ = UINT64_MAX;
  std::vector<std::vector<std::size_t>> epoch_batches_;
};

struct TrainResult {
  Checkpoint checkpoint;
  MetricTrace trace;
  std::optional<EvalResult> initial_eval;
  std::optional<EvalResult> final_eval;
};

EncoderParams initial_params(const TrainConfig& config, std::size_t vocab_size);

// Runs config.steps steps from `start` (fresh parameters when empty). When
// `eval_pairs` is non-empty the encoder is scored at dropout rate 0 every
// eval_every steps and at the end. If config.checkpoint_path is non-empty the
// checkpoint is written there at every snapshot and at the end, with the
// trace next to it.
TrainResult train(const TrainConfig& config, const std::vector<TokenSequence>& corpus,
                  const Vocabulary& vocab, std::span<const StsPair> eval_pairs = {},
                  std::optional<Checkpoint> start = std::nullopt);

std::filesystem::path trace_path_for(const std::filesystem::path& checkpoint_path);
std::filesystem::path config_path_for(const std::filesystem::path& checkpoint_path);

}  // namespace escl
