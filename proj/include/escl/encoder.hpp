#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "escl/numerics.hpp"

namespace escl {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t output_dim = 0;

  bool operator==(const EncoderConfig&) const = default;
};

// Trainable weights shared by every dropout view:
//   out = tanh(mean_t(E[x_t] * m_t) . W + b)
struct EncoderParams {
  EncoderConfig config;
  Tensor token_embeddings;   // (vocab_size, embed_dim)
  Tensor projection_weight;  // (embed_dim, output_dim)
  Tensor projection_bias;    // (output_dim)

  // Throws DimensionError if the tensors disagree with `config`.
  void validate() const;

  std::size_t parameter_count() const;
  // Flat view in the order embeddings, weight, bias. Used by the optimizer
  // and by gradient checks.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const EncoderParams&) const = default;
};

// Gradient buffers with the same layout as EncoderParams.
struct EncoderGrads {
  Tensor token_embeddings;
  Tensor projection_weight;
  Tensor projection_bias;

  static EncoderGrads zeros_like(const EncoderParams& params);
  std::vector<double> flatten() const;
  bool all_finite() const;
};

struct TokenSequence {
  std::vector<std::int64_t> token_ids;

  std::size_t size() const { return token_ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

struct BatchViews {
  Tensor h;      // (N, output_dim), low-rate view
  Tensor h_pos;  // (N, output_dim), second low-rate view
  Tensor h_neg;  // (N, output_dim), high-rate view
};

// Glorot-uniform embeddings and projection, zero bias.
EncoderParams init_params(std::size_t vocab_size, std::size_t embed_dim, std::size_t output_dim,
                          const RngStream& rng);

// Intermediate activations kept for the backward pass.
struct EncodeCache {
  std::vector<double> pooled;
  std::vector<double> output;
};

std::vector<double> encode(const EncoderParams& params, const TokenSequence& x,
                           DropoutSpec spec, const DropoutMask& mask);

EncodeCache encode_with_cache(const EncoderParams& params, const TokenSequence& x,
                              DropoutSpec spec, const DropoutMask& mask);

// Deterministic embedding with dropout disabled.
std::vector<double> encode_inference(const EncoderParams& params, const TokenSequence& x);

// Adds d(loss)/d(params) into `grads` given d(loss)/d(output).
void encode_backward(const EncoderParams& params, const TokenSequence& x, const DropoutMask& mask,
                     const EncodeCache& cache, std::span<const double> d_output,
                     EncoderGrads& grads);

// Masks for the three views of every sentence, kept so a training step can
// backpropagate through exactly the forward pass it evaluated.
struct ViewSample {
  BatchViews views;
  std::vector<DropoutMask> masks_h;
  std::vector<DropoutMask> masks_pos;
  std::vector<DropoutMask> masks_neg;
  std::vector<EncodeCache> cache_h;
  std::vector<EncodeCache> cache_pos;
  std::vector<EncodeCache> cache_neg;
};

enum class View : std::uint64_t { kAnchor = 0, kPositive = 1, kNegative = 2 };

// Mask stream for one sentence and view. `sentence_key` identifies the
// sentence (its corpus index during training).
RngStream view_stream(const RngStream& rng, std::uint64_t sentence_key, View view);

// Two low-rate views and one high-rate view per sentence. Masks come from
// streams keyed by sentence position in `batch`.
BatchViews embed_batch_views(const EncoderParams& params, std::span<const TokenSequence> batch,
                             DropoutSpec r_low, DropoutSpec r_high, const RngStream& rng);

// As above, with explicit per-sentence stream keys; keeps masks and caches.
ViewSample sample_batch_views(const EncoderParams& params, std::span<const TokenSequence> batch,
                              std::span<const std::uint64_t> sentence_keys, DropoutSpec r_low,
                              DropoutSpec r_high, const RngStream& rng);

}  // namespace escl
