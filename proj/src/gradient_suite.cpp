#include "escl/gradient_suite.hpp"

#include "escl/encoder.hpp"
#include "escl/losses.hpp"
#include "escl/training.hpp"

namespace escl {

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, RngStream rng) {
  Tensor m = Tensor::matrix(rows, cols);
  for (double& v : m.data()) v = rng.next_uniform(-1.0, 1.0);
  return m;
}

struct ViewLayout {
  std::size_t n;
  std::size_t d;

  BatchViews unpack(std::span<const double> flat) const {
    const std::size_t block = n * d;
    const auto slice = [&](std::size_t k) {
      return Tensor({n, d}, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(k * block),
                                                flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * block)));
    };
    return {slice(0), slice(1), slice(2)};
  }

  static std::vector<double> pack(const Tensor& a, const Tensor& b, const Tensor& c) {
    std::vector<double> flat(a.values());
    flat.insert(flat.end(), b.values().begin(), b.values().end());
    flat.insert(flat.end(), c.values().begin(), c.values().end());
    return flat;
  }
};

}  // namespace

std::vector<GradientCheckEntry> run_gradient_suite(std::size_t trials, std::uint64_t seed,
                                                   double eps) {
  GradCheckOptions options;
  options.eps = eps;
  options.max_components = 200;
  options.seed = seed;

  std::vector<GradientCheckEntry> entries;
  const auto record = [&](const std::string& name, std::size_t trial, const ScalarFn& f,
                          const GradientFn& g, std::vector<double> x) {
    entries.push_back({name, trial, grad_check(f, g, std::move(x), options)});
  };

  record(
      "quadratic", 0, [](std::span<const double> w) { return w[0] * w[0]; },
      [](std::span<const double> w) { return std::vector<double>{2.0 * w[0]}; }, {3.0});

  const RngStream root = RngStream(seed).derive("gradient_suite");
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const RngStream rng = root.derive(trial);
    const ViewLayout layout{4, 8};
    const std::vector<double> x =
        ViewLayout::pack(random_matrix(4, 8, rng.derive("h")), random_matrix(4, 8, rng.derive("p")),
                         random_matrix(4, 8, rng.derive("n")));

    const double tau = 0.05;
    record(
        "info_nce", trial,
        [&](std::span<const double> v) {
          const auto views = layout.unpack(v);
          return info_nce(views.h, views.h_pos, tau);
        },
        [&](std::span<const double> v) {
          const auto views = layout.unpack(v);
          const LossValue g = info_nce_with_grad(views.h, views.h_pos, tau);
          return ViewLayout::pack(g.d_h, g.d_pos, g.d_neg);
        },
        x);
    record(
        "rd_loss", trial,
        [&](std::span<const double> v) {
          const auto views = layout.unpack(v);
          return rd_loss(views.h, views.h_pos, views.h_neg);
        },
        [&](std::span<const double> v) {
          const auto views = layout.unpack(v);
          const LossValue g = rd_loss_with_grad(views.h, views.h_pos, views.h_neg);
          return ViewLayout::pack(g.d_h, g.d_pos, g.d_neg);
        },
        x);
    record(
        "cossim_loss", trial,
        [&](std::span<const double> v) {
          const auto views = layout.unpack(v);
          return cossim_loss(views.h, views.h_pos, views.h_neg);
        },
        [&](std::span<const double> v) {
          const auto views = layout.unpack(v);
          const LossValue g = cossim_loss_with_grad(views.h, views.h_pos, views.h_neg);
          return ViewLayout::pack(g.d_h, g.d_pos, g.d_neg);
        },
        x);

    LossConfig cfg;
    cfg.temperature = tau;
    cfg.lambda = 2.5e-3;
    for (EquivariantVariant variant :
         {EquivariantVariant::kRelativeDifference, EquivariantVariant::kCosSim}) {
      cfg.variant = variant;
      record(
          "escl_loss[" + to_string(variant) + "]", trial,
          [&](std::span<const double> v) { return escl_loss(layout.unpack(v), cfg).breakdown.total; },
          [&](std::span<const double> v) {
            const EsclResult r = escl_loss(layout.unpack(v), cfg);
            return ViewLayout::pack(r.d_h, r.d_pos, r.d_neg);
          },
          x);
    }

    // Encoder forward pass: a fixed random projection of the output.
    EncoderParams params = init_params(12, 6, 5, rng.derive("encoder"));
    RngStream bias_rng = rng.derive("bias");
    for (double& b : params.projection_bias.data()) b = bias_rng.next_uniform(-0.5, 0.5);
    const TokenSequence sentence{{3, 7, 3, 11, 5}};
    const DropoutSpec spec{0.3};
    const DropoutMask mask = sample_dropout_mask({sentence.size(), 6}, spec, rng.derive("mask"));
    std::vector<double> weights(5);
    RngStream w_rng = rng.derive("weights");
    for (double& w : weights) w = w_rng.next_uniform(-1.0, 1.0);
    record(
        "encoder_forward", trial,
        [&](std::span<const double> theta) {
          EncoderParams p = params;
          p.assign(theta);
          return dot(weights, encode(p, sentence, spec, mask));
        },
        [&](std::span<const double> theta) {
          EncoderParams p = params;
          p.assign(theta);
          const EncodeCache cache = encode_with_cache(p, sentence, spec, mask);
          EncoderGrads grads = EncoderGrads::zeros_like(p);
          encode_backward(p, sentence, mask, cache, weights, grads);
          return grads.flatten();
        },
        params.flatten());

    // Combined loss through the encoder, masks frozen by reusing the stream.
    const std::vector<TokenSequence> batch = {
        TokenSequence{{2, 3, 4}}, TokenSequence{{5, 6, 2, 9}}, TokenSequence{{10, 11}},
        TokenSequence{{4, 8, 8, 1, 7}}};
    const std::vector<std::uint64_t> keys = {0, 1, 2, 3};
    TrainConfig train_cfg;
    train_cfg.loss = cfg;
    train_cfg.loss.variant = EquivariantVariant::kRelativeDifference;
    const RngStream mask_rng = rng.derive("batch_masks");
    record(
        "escl_through_encoder", trial,
        [&](std::span<const double> theta) {
          EncoderParams p = params;
          p.assign(theta);
          return compute_batch_gradient(p, batch, keys, train_cfg, mask_rng).breakdown.total;
        },
        [&](std::span<const double> theta) {
          EncoderParams p = params;
          p.assign(theta);
          return compute_batch_gradient(p, batch, keys, train_cfg, mask_rng).grads.flatten();
        },
        params.flatten());
  }
  return entries;
}

}  // namespace escl
