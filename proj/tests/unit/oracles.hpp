#pragma once

// Direct, unoptimized reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <vector>

#include "escl/numerics.hpp"

namespace oracle {

inline double cos(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

// -log(e^{s_ii/t} / sum_j e^{s_ij/t}) averaged over rows, evaluated as written.
inline double info_nce(const escl::Tensor& h, const escl::Tensor& p, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    double denom = 0;
    for (std::size_t j = 0; j < h.rows(); ++j) denom += std::exp(cos(h.row(i), p.row(j)) / tau);
    total += -std::log(std::exp(cos(h.row(i), p.row(i)) / tau) / denom);
  }
  return total / static_cast<double>(h.rows());
}

inline double rd(const escl::Tensor& h, const escl::Tensor& p, const escl::Tensor& n) {
  double total = 0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double pos = cos(h.row(i), p.row(i));
    total += std::exp(cos(h.row(i), n.row(i)) - pos);
    total += std::exp(cos(p.row(i), n.row(i)) - pos);
  }
  return total / static_cast<double>(h.rows());
}

inline double cossim(const escl::Tensor& h, const escl::Tensor& p, const escl::Tensor& n) {
  double total = 0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    total += std::exp(cos(h.row(i), n.row(i)));
    total += std::exp(cos(p.row(i), n.row(i)));
  }
  return total / static_cast<double>(h.rows());
}

// Rank by counting: rank(x_i) = #{x_j < x_i} + (#{x_j == x_i} + 1) / 2.
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) less += 1;
      if (v == x[i]) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline escl::Tensor random_matrix(std::size_t rows, std::size_t cols, escl::RngStream& rng) {
  escl::Tensor m = escl::Tensor::matrix(rows, cols);
  for (double& v : m.data()) v = rng.next_uniform(-1.0, 1.0);
  return m;
}

}  // namespace oracle
