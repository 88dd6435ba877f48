#include "escl/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "escl/errors.hpp"

namespace escl {

namespace {

// Row-normalized copy of an embedding matrix.
struct UnitRows {
  Tensor unit;
  std::vector<double> norm;

  explicit UnitRows(const Tensor& m) : unit(m), norm(m.rows()) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      norm[i] = l2_norm(m.row(i));
      if (norm[i] == 0.0 || !std::isfinite(norm[i])) {
        throw DegenerateInputError("embedding row " + std::to_string(i) +
                                   " has zero or non-finite norm");
      }
      for (double& v : unit.row(i)) v /= norm[i];
    }
  }

  double sim(std::size_t i, const UnitRows& other, std::size_t j) const {
    return dot(unit.row(i), other.unit.row(j));
  }
};

void require_matrix(const Tensor& m, const char* name) {
  if (m.rank() != 2 || m.rows() == 0 || m.cols() == 0) {
    throw DimensionError(std::string(name) + " must be a non-empty (N, d) matrix");
  }
}

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("embedding matrices differ in shape");
}

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("temperature must be positive");
}

// Adds g * d sim(a_i, b_j) into da.row(i) and db.row(j), where
// d sim / d a = (b_hat - s a_hat) / |a|.
void add_sim_grad(double g, std::size_t i, std::size_t j, const UnitRows& a, const UnitRows& b,
                  double s, Tensor& da, Tensor& db) {
  if (g == 0.0) return;
  const auto ua = a.unit.row(i);
  const auto ub = b.unit.row(j);
  auto ga = da.row(i);
  auto gb = db.row(j);
  const double sa = g / a.norm[i];
  const double sb = g / b.norm[j];
  for (std::size_t f = 0; f < ua.size(); ++f) {
    ga[f] += sa * (ub[f] - s * ua[f]);
    gb[f] += sb * (ua[f] - s * ub[f]);
  }
}

// Sum over the triplet views of one equivariant loss, with `relative`
// selecting RD (subtract sim(h, h+)) or CosSim.
LossValue equivariant_with_grad(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg,
                                bool relative) {
  require_matrix(h, "H");
  require_same_shape(h, h_pos);
  require_same_shape(h, h_neg);
  const UnitRows a(h), p(h_pos), n(h_neg);
  const std::size_t rows = h.rows();
  const double inv_n = 1.0 / static_cast<double>(rows);

  LossValue out{0.0, Tensor(h.shape()), Tensor(h.shape()), Tensor(h.shape())};
  for (std::size_t i = 0; i < rows; ++i) {
    const double s_an = a.sim(i, n, i);
    const double s_pn = p.sim(i, n, i);
    const double s_ap = relative ? a.sim(i, p, i) : 0.0;
    const double t1 = std::exp(s_an - s_ap);
    const double t2 = std::exp(s_pn - s_ap);
    out.value += t1 + t2;
    add_sim_grad(t1 * inv_n, i, i, a, n, s_an, out.d_h, out.d_neg);
    add_sim_grad(t2 * inv_n, i, i, p, n, s_pn, out.d_pos, out.d_neg);
    if (relative) add_sim_grad(-(t1 + t2) * inv_n, i, i, a, p, s_ap, out.d_h, out.d_pos);
  }
  out.value *= inv_n;
  return out;
}

double mean_distance(const UnitRows& a, const UnitRows& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.norm.size(); ++i) s += 1.0 - a.sim(i, b, i);
  return s / static_cast<double>(a.norm.size());
}

}  // namespace

std::string to_string(EquivariantVariant variant) {
  switch (variant) {
    case EquivariantVariant::kRelativeDifference:
      return "rd";
    case EquivariantVariant::kCosSim:
      return "cossim";
    case EquivariantVariant::kNone:
      return "none";
  }
  return "unknown";
}

EquivariantVariant parse_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rd") return EquivariantVariant::kRelativeDifference;
  if (lower == "cossim") return EquivariantVariant::kCosSim;
  if (lower == "none") return EquivariantVariant::kNone;
  throw ConfigError("unknown equivariant variant '" + std::string(text) +
                    "' (expected rd, cossim or none)");
}

void LossConfig::validate() const {
  require_tau(temperature);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative");
}

LossValue info_nce_with_grad(const Tensor& h, const Tensor& h_pos, double tau) {
  require_tau(tau);
  require_matrix(h, "H");
  require_same_shape(h, h_pos);
  const UnitRows a(h), p(h_pos);
  const std::size_t n = h.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossValue out{0.0, Tensor(h.shape()), Tensor(h.shape()), Tensor(h.shape())};
  std::vector<double> sims(n), probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Logits are taken relative to the positive pair so the row loss is
    // log sum_j exp(d_j) with d_i = 0; no large terms cancel.
    for (std::size_t j = 0; j < n; ++j) sims[j] = a.sim(i, p, j);
    double max_shift = 0.0;
    for (std::size_t j = 0; j < n; ++j) max_shift = std::max(max_shift, (sims[j] - sims[i]) / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[j] = std::exp((sims[j] - sims[i]) / tau - max_shift);
      z += probs[j];
    }
    out.value += max_shift + std::log(z);
    for (std::size_t j = 0; j < n; ++j) {
      const double softmax = probs[j] / z;
      const double g = (softmax - (i == j ? 1.0 : 0.0)) * inv_n / tau;
      add_sim_grad(g, i, j, a, p, sims[j], out.d_h, out.d_pos);
    }
  }
  out.value *= inv_n;
  return out;
}

double info_nce(const Tensor& h, const Tensor& h_pos, double tau) {
  return info_nce_with_grad(h, h_pos, tau).value;
}

double info_nce_alt(const Tensor& h, const Tensor& h_pos, double tau) {
  require_tau(tau);
  require_matrix(h, "H");
  require_same_shape(h, h_pos);
  const UnitRows a(h), p(h_pos);
  const std::size_t n = h.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double positive = a.sim(i, p, i) / tau;
    // e^{s_ij} / e^{s_ii} folded into a single exponent.
    double ratio = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) ratio += std::exp(a.sim(i, p, j) / tau - positive);
    }
    total += std::log1p(ratio);
  }
  return total / static_cast<double>(n);
}

LossValue rd_loss_with_grad(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg) {
  return equivariant_with_grad(h, h_pos, h_neg, true);
}

double rd_loss(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg) {
  return rd_loss_with_grad(h, h_pos, h_neg).value;
}

LossValue cossim_loss_with_grad(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg) {
  return equivariant_with_grad(h, h_pos, h_neg, false);
}

double cossim_loss(const Tensor& h, const Tensor& h_pos, const Tensor& h_neg) {
  return cossim_loss_with_grad(h, h_pos, h_neg).value;
}

EsclResult escl_loss(const BatchViews& views, const LossConfig& cfg) {
  cfg.validate();
  const LossValue nce = info_nce_with_grad(views.h, views.h_pos, cfg.temperature);
  require_same_shape(views.h, views.h_neg);

  EsclResult result;
  result.breakdown.info_nce = nce.value;
  result.breakdown.lambda = cfg.lambda;
  result.d_h = nce.d_h;
  result.d_pos = nce.d_pos;
  result.d_neg = Tensor(views.h.shape());

  if (cfg.variant != EquivariantVariant::kNone) {
    const LossValue eq = equivariant_with_grad(
        views.h, views.h_pos, views.h_neg,
        cfg.variant == EquivariantVariant::kRelativeDifference);
    result.breakdown.equivariant = eq.value;
    const auto axpy = [&](Tensor& dst, const Tensor& src) {
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += cfg.lambda * src[k];
    };
    axpy(result.d_h, eq.d_h);
    axpy(result.d_pos, eq.d_pos);
    axpy(result.d_neg, eq.d_neg);
    result.breakdown.total = nce.value + cfg.lambda * eq.value;
  } else {
    result.breakdown.total = nce.value;
  }

  const UnitRows a(views.h), p(views.h_pos), n(views.h_neg);
  result.breakdown.dist_pos = mean_distance(a, p);
  result.breakdown.dist_neg = 0.5 * (mean_distance(a, n) + mean_distance(p, n));

  if (!std::isfinite(result.breakdown.info_nce)) throw NumericError("info_nce is not finite");
  if (!std::isfinite(result.breakdown.equivariant)) {
    throw NumericError("equivariant loss is not finite");
  }
  return result;
}

}  // namespace escl
