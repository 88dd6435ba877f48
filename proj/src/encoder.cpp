#include "escl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "escl/errors.hpp"

namespace escl {

namespace {

void fill_uniform(Tensor& t, double bound, RngStream rng) {
  for (double& v : t.data()) v = rng.next_uniform(-bound, bound);
}

void check_sequence(const EncoderParams& params, const TokenSequence& x) {
  if (x.token_ids.empty()) throw InputError("encode: empty token sequence");
  for (std::int64_t id : x.token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.config.vocab_size) {
      throw InputError("encode: token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(params.config.vocab_size));
    }
  }
}

void check_mask(const EncoderParams& params, const TokenSequence& x, const DropoutMask& mask) {
  const auto& shape = mask.values.shape();
  if (shape.size() != 2 || shape[0] != x.size() || shape[1] != params.config.embed_dim) {
    throw DimensionError("encode: mask shape must be (sequence length, embed_dim) = (" +
                         std::to_string(x.size()) + ", " +
                         std::to_string(params.config.embed_dim) + ")");
  }
}

}  // namespace

void EncoderParams::validate() const {
  const auto& c = config;
  if (c.vocab_size == 0 || c.embed_dim == 0 || c.output_dim == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (token_embeddings.shape() != std::vector<std::size_t>{c.vocab_size, c.embed_dim} ||
      projection_weight.shape() != std::vector<std::size_t>{c.embed_dim, c.output_dim} ||
      projection_bias.shape() != std::vector<std::size_t>{c.output_dim}) {
    throw DimensionError("encoder tensors disagree with configured dimensions");
  }
}

std::size_t EncoderParams::parameter_count() const {
  return token_embeddings.size() + projection_weight.size() + projection_bias.size();
}

std::vector<double> EncoderParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Tensor* t : {&token_embeddings, &projection_weight, &projection_bias}) {
    flat.insert(flat.end(), t->values().begin(), t->values().end());
  }
  return flat;
}

void EncoderParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw DimensionError("assign: parameter count mismatch");
  std::size_t offset = 0;
  for (Tensor* t : {&token_embeddings, &projection_weight, &projection_bias}) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t->size(), t->data().begin());
    offset += t->size();
  }
}

EncoderGrads EncoderGrads::zeros_like(const EncoderParams& params) {
  return EncoderGrads{Tensor(params.token_embeddings.shape()),
                      Tensor(params.projection_weight.shape()),
                      Tensor(params.projection_bias.shape())};
}

std::vector<double> EncoderGrads::flatten() const {
  std::vector<double> flat;
  for (const Tensor* t : {&token_embeddings, &projection_weight, &projection_bias}) {
    flat.insert(flat.end(), t->values().begin(), t->values().end());
  }
  return flat;
}

bool EncoderGrads::all_finite() const {
  return token_embeddings.all_finite() && projection_weight.all_finite() &&
         projection_bias.all_finite();
}

EncoderParams init_params(std::size_t vocab_size, std::size_t embed_dim, std::size_t output_dim,
                          const RngStream& rng) {
  if (vocab_size == 0 || embed_dim == 0 || output_dim == 0) {
    throw ConfigError("init_params: vocab_size, embed_dim and output_dim must be at least 1");
  }
  EncoderParams params;
  params.config = {vocab_size, embed_dim, output_dim};
  params.token_embeddings = Tensor::matrix(vocab_size, embed_dim);
  params.projection_weight = Tensor::matrix(embed_dim, output_dim);
  params.projection_bias = Tensor({output_dim});

  const auto glorot = [](std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  };
  fill_uniform(params.token_embeddings, glorot(vocab_size, embed_dim), rng.derive("embeddings"));
  fill_uniform(params.projection_weight, glorot(embed_dim, output_dim), rng.derive("projection"));
  return params;
}

EncodeCache encode_with_cache(const EncoderParams& params, const TokenSequence& x,
                              DropoutSpec spec, const DropoutMask& mask) {
  spec.validate();
  check_sequence(params, x);
  check_mask(params, x, mask);
  if (mask.rate != spec.rate) {
    throw ConfigError("encode: mask was sampled at a different rate than the dropout spec");
  }

  const std::size_t d = params.config.embed_dim;
  const std::size_t k = params.config.output_dim;
  EncodeCache cache;
  cache.pooled.assign(d, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto e = params.token_embeddings.row(static_cast<std::size_t>(x.token_ids[t]));
    const auto m = mask.values.row(t);
    for (std::size_t f = 0; f < d; ++f) cache.pooled[f] += e[f] * m[f];
  }
  const double inv_len = 1.0 / static_cast<double>(x.size());
  for (double& v : cache.pooled) v *= inv_len;

  cache.output.assign(params.projection_bias.values().begin(),
                      params.projection_bias.values().end());
  for (std::size_t f = 0; f < d; ++f) {
    const double p = cache.pooled[f];
    const auto w = params.projection_weight.row(f);
    for (std::size_t o = 0; o < k; ++o) cache.output[o] += p * w[o];
  }
  for (double& v : cache.output) v = std::tanh(v);
  return cache;
}

std::vector<double> encode(const EncoderParams& params, const TokenSequence& x, DropoutSpec spec,
                           const DropoutMask& mask) {
  return encode_with_cache(params, x, spec, mask).output;
}

std::vector<double> encode_inference(const EncoderParams& params, const TokenSequence& x) {
  return encode(params, x, DropoutSpec{0.0},
                DropoutMask::ones({x.size(), params.config.embed_dim}));
}

void encode_backward(const EncoderParams& params, const TokenSequence& x, const DropoutMask& mask,
                     const EncodeCache& cache, std::span<const double> d_output,
                     EncoderGrads& grads) {
  const std::size_t d = params.config.embed_dim;
  const std::size_t k = params.config.output_dim;
  if (d_output.size() != k) throw DimensionError("encode_backward: output gradient length");

  std::vector<double> d_pre(k);
  for (std::size_t o = 0; o < k; ++o) {
    d_pre[o] = d_output[o] * (1.0 - cache.output[o] * cache.output[o]);
    grads.projection_bias[o] += d_pre[o];
  }
  std::vector<double> d_pooled(d, 0.0);
  for (std::size_t f = 0; f < d; ++f) {
    const auto w = params.projection_weight.row(f);
    auto gw = grads.projection_weight.row(f);
    const double p = cache.pooled[f];
    double acc = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      gw[o] += p * d_pre[o];
      acc += w[o] * d_pre[o];
    }
    d_pooled[f] = acc;
  }
  const double inv_len = 1.0 / static_cast<double>(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    auto ge = grads.token_embeddings.row(static_cast<std::size_t>(x.token_ids[t]));
    const auto m = mask.values.row(t);
    for (std::size_t f = 0; f < d; ++f) ge[f] += d_pooled[f] * m[f] * inv_len;
  }
}

RngStream view_stream(const RngStream& rng, std::uint64_t sentence_key, View view) {
  return rng.derive(sentence_key).derive(static_cast<std::uint64_t>(view));
}

ViewSample sample_batch_views(const EncoderParams& params, std::span<const TokenSequence> batch,
                              std::span<const std::uint64_t> sentence_keys, DropoutSpec r_low,
                              DropoutSpec r_high, const RngStream& rng) {
  r_low.validate();
  r_high.validate();
  if (batch.empty()) throw InputError("embed_batch_views: empty batch");
  if (sentence_keys.size() != batch.size()) {
    throw DimensionError("embed_batch_views: one stream key per sentence required");
  }
  // Equal rates are allowed only in the degenerate all-zero case, which
  // collapses the three views onto one deterministic embedding.
  if (r_low.rate > r_high.rate || (r_low.rate == r_high.rate && r_low.rate != 0.0)) {
    throw ConfigError("embed_batch_views: r_low must be below r_high");
  }

  const std::size_t n = batch.size();
  const std::size_t k = params.config.output_dim;
  ViewSample sample;
  sample.views = {Tensor::matrix(n, k), Tensor::matrix(n, k), Tensor::matrix(n, k)};
  struct Slot {
    View view;
    DropoutSpec spec;
    Tensor* rows;
    std::vector<DropoutMask>* masks;
    std::vector<EncodeCache>* caches;
  };
  const Slot slots[] = {
      {View::kAnchor, r_low, &sample.views.h, &sample.masks_h, &sample.cache_h},
      {View::kPositive, r_low, &sample.views.h_pos, &sample.masks_pos, &sample.cache_pos},
      {View::kNegative, r_high, &sample.views.h_neg, &sample.masks_neg, &sample.cache_neg},
  };
  for (const Slot& slot : slots) {
    slot.masks->reserve(n);
    slot.caches->reserve(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const Slot& slot : slots) {
      DropoutMask mask = sample_dropout_mask({batch[i].size(), params.config.embed_dim}, slot.spec,
                                             view_stream(rng, sentence_keys[i], slot.view));
      EncodeCache cache = encode_with_cache(params, batch[i], slot.spec, mask);
      std::copy(cache.output.begin(), cache.output.end(), slot.rows->row(i).begin());
      slot.masks->push_back(std::move(mask));
      slot.caches->push_back(std::move(cache));
    }
  }
  return sample;
}

BatchViews embed_batch_views(const EncoderParams& params, std::span<const TokenSequence> batch,
                             DropoutSpec r_low, DropoutSpec r_high, const RngStream& rng) {
  std::vector<std::uint64_t> keys(batch.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i;
  return sample_batch_views(params, batch, keys, r_low, r_high, rng).views;
}

}  // namespace escl
