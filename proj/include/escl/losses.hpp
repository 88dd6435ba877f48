#pragma once

#include <string>
#include <string_view>

#include "escl/encoder.hpp"
#include "escl/numerics.hpp"

namespace escl {

enum class EquivariantVariant { kRelativeDifference, kCosSim, kNone };

std::string to_string(EquivariantVariant variant);
// Accepts "rd", "cossim", "none" (case-insensitive).
EquivariantVariant parse_variant(std::string_view text);

struct LossConfig {
  double temperature = 0.05;
  double lambda = 2.5e-3;
  EquivariantVariant variant = EquivariantVariant::kRelativeDifference;

  void validate() const;
};

struct LossBreakdown {
  double info_nce = 0.0;
  double equivariant = 0.0;
  double lambda = 0.0;
  double total = 0.0;
  // mean(1 - sim(h_i, h_i+))
  double dist_pos = 0.0;
  // mean over h' in {h_i, h_i+} of (1 - sim(h', h_i-))
  double dist_neg = 0.0;
};

// A batch loss value with its gradient for each embedding matrix that feeds
// it. Matrices the loss does not read get zero gradients.
struct LossValue {
  double value = 0.0;
  Tensor d_h;
  Tensor d_pos;
  Tensor d_neg;
};

// Batch-mean InfoNCE with in-batch negatives (the softmax denominator runs
// over every h_j+, including j = i), stabilized by log-sum-exp.
double info_nce(const Tensor& h, const Tensor& h_pos, double tau);
LossValue info_nce_with_grad(const Tensor& h, const Tensor& h_pos, double tau);

// The same objective written as log(1 + sum_{j!=i} e^{s_ij} / e^{s_ii}).
double info_nce_alt(const Tensor& h, const Tensor& h_pos, double tau);

// mean_i sum_{h' in {h_i, h_i+}} exp(sim(h', h_i-) - sim(h_i, h_i+))
double rd_loss(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg);
LossValue rd_loss_with_grad(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg);

// mean_i sum_{h' in {h_i, h_i+}} exp(sim(h', h_i-))
double cossim_loss(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg);
LossValue cossim_loss_with_grad(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg);

struct EsclResult {
  LossBreakdown breakdown;
  // Gradient of breakdown.total with respect to each view.
  Tensor d_h;
  Tensor d_pos;
  Tensor d_neg;
};

// total = info_nce + lambda * equivariant; with variant None the
// equivariant term is reported as 0 and lambda has no effect.
EsclResult escl_loss(const BatchViews& views, const LossConfig& cfg);

}  // namespace escl
