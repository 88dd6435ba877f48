#include <doctest.h>

#include <cmath>
#include <numbers>

#include "escl/errors.hpp"
#include "escl/losses.hpp"
#include "oracles.hpp"

using namespace escl;

namespace {

Tensor rows(std::vector<std::vector<double>> r) {
  Tensor t = Tensor::matrix(r.size(), r[0].size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r[i].size(); ++j) t(i, j) = r[i][j];
  }
  return t;
}

Tensor permute_rows(const Tensor& m, const std::vector<std::size_t>& order) {
  Tensor out = Tensor::matrix(m.rows(), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy(m.row(order[i]).begin(), m.row(order[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

TEST_CASE("info_nce with one sentence is zero") {
  const Tensor h = rows({{1, 2, 3}}), p = rows({{-1, 0, 4}});
  CHECK(info_nce(h, p, 0.05) == 0.0);
  CHECK(info_nce_alt(h, p, 0.05) == 0.0);
}

TEST_CASE("info_nce with equal similarities is log 2") {
  const Tensor h = rows({{1, 0}, {0, 1}}), p = rows({{1, 1}, {1, 1}});
  CHECK(info_nce(h, p, 0.05) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(info_nce_alt(h, p, 0.05) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("info_nce matches the direct formula") {
  RngStream rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor h = oracle::random_matrix(8, 16, rng), p = oracle::random_matrix(8, 16, rng);
    CHECK(std::abs(info_nce(h, p, 0.05) - oracle::info_nce(h, p, 0.05)) < 1e-10);
    CHECK(std::abs(info_nce(h, p, 0.05) - info_nce_alt(h, p, 0.05)) < 1e-9);
  }
}

TEST_CASE("info_nce stays finite where the direct formula overflows") {
  RngStream rng(2);
  const Tensor h = oracle::random_matrix(6, 4, rng), p = oracle::random_matrix(6, 4, rng);
  const double v = info_nce(h, p, 1e-3);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  CHECK_FALSE(std::isfinite(oracle::info_nce(h, p, 1e-3)));
}

TEST_CASE("info_nce ignores row scale and batch order") {
  RngStream rng(3);
  Tensor h = oracle::random_matrix(5, 6, rng), p = oracle::random_matrix(5, 6, rng);
  const double base = info_nce(h, p, 0.1);
  Tensor scaled = h;
  for (std::size_t f = 0; f < 6; ++f) scaled(2, f) *= 7.5;
  CHECK(info_nce(scaled, p, 0.1) == doctest::Approx(base).epsilon(1e-12));
  const std::vector<std::size_t> order{3, 0, 4, 1, 2};
  CHECK(info_nce(permute_rows(h, order), permute_rows(p, order), 0.1) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("loss argument errors") {
  const Tensor h = rows({{1, 0}}), zero = rows({{0, 0}}), wide = rows({{1, 0, 0}});
  CHECK_THROWS_AS(info_nce(h, h, 0.0), ConfigError);
  CHECK_THROWS_AS(info_nce(h, zero, 0.05), DegenerateInputError);
  CHECK_THROWS_AS(info_nce(h, wide, 0.05), DimensionError);
  CHECK_THROWS_AS(rd_loss(h, h, zero), DegenerateInputError);
  CHECK_THROWS_AS(parse_variant("triplet"), ConfigError);
}

TEST_CASE("rd and cossim anchors") {
  const Tensor same = rows({{1, 2}, {3, -1}});
  CHECK(rd_loss(same, same, same) == 2.0);
  CHECK(cossim_loss(same, same, same) == doctest::Approx(2 * std::numbers::e).epsilon(1e-15));

  const Tensor h = rows({{1, 0}}), n = rows({{0, 1}});
  CHECK(rd_loss(h, h, n) == doctest::Approx(2 / std::numbers::e).epsilon(1e-15));
  CHECK(cossim_loss(h, h, n) == 2.0);
}

TEST_CASE("rd and cossim match per-sentence loops") {
  RngStream rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor h = oracle::random_matrix(7, 5, rng), p = oracle::random_matrix(7, 5, rng),
                 n = oracle::random_matrix(7, 5, rng);
    CHECK(std::abs(rd_loss(h, p, n) - oracle::rd(h, p, n)) < 1e-12);
    CHECK(std::abs(cossim_loss(h, p, n) - oracle::cossim(h, p, n)) < 1e-12);
  }
}

TEST_CASE("rd falls as the negative view turns away") {
  const Tensor h = rows({{1, 0}}), p = rows({{1, 0.1}});
  double previous = INFINITY;
  for (double angle = 0.0; angle <= std::numbers::pi; angle += 0.25) {
    const Tensor n = rows({{std::cos(angle), std::sin(angle)}});
    const double v = rd_loss(h, p, n);
    CHECK(v < previous);
    previous = v;
  }
}

TEST_CASE("rd rewards closer positives while cossim ignores them") {
  const Tensor h = rows({{1, 0}}), n = rows({{0, 1}});
  // Both positives sit at the same angle to n but on opposite sides of h.
  const Tensor near = rows({{1, 0.5}}), far = rows({{-1, 0.5}});
  CHECK(rd_loss(h, near, n) < rd_loss(h, far, n));
  CHECK(cossim_loss(h, near, n) == cossim_loss(h, far, n));
}

TEST_CASE("combined loss recomposes its parts") {
  RngStream rng(5);
  const BatchViews v{oracle::random_matrix(6, 4, rng), oracle::random_matrix(6, 4, rng),
                     oracle::random_matrix(6, 4, rng)};
  const LossConfig cfg{0.05, 2.5e-3, EquivariantVariant::kRelativeDifference};
  const auto r = escl_loss(v, cfg);
  CHECK(r.breakdown.info_nce == info_nce(v.h, v.h_pos, 0.05));
  CHECK(r.breakdown.equivariant == rd_loss(v.h, v.h_pos, v.h_neg));
  CHECK(r.breakdown.total == r.breakdown.info_nce + 2.5e-3 * r.breakdown.equivariant);
  CHECK(r.breakdown.lambda == 2.5e-3);

  double dp = 0, dn = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    dp += 1 - oracle::cos(v.h.row(i), v.h_pos.row(i));
    dn += 0.5 * (2 - oracle::cos(v.h.row(i), v.h_neg.row(i)) -
                 oracle::cos(v.h_pos.row(i), v.h_neg.row(i)));
  }
  CHECK(r.breakdown.dist_pos == doctest::Approx(dp / 6).epsilon(1e-12));
  CHECK(r.breakdown.dist_neg == doctest::Approx(dn / 6).epsilon(1e-12));
}

TEST_CASE("combined total is a linear combination") {
  CHECK(0.7 + 2.5e-3 * 2.0 == doctest::Approx(0.705).epsilon(1e-15));
  const Tensor same = rows({{1, 2}, {3, -1}});
  const BatchViews v{same, same, same};
  const auto r = escl_loss(v, LossConfig{});
  CHECK(r.breakdown.equivariant == 2.0);
  CHECK(r.breakdown.total == r.breakdown.info_nce + 2.5e-3 * 2.0);
}

TEST_CASE("lambda zero gives plain info_nce") {
  RngStream rng(6);
  const BatchViews v{oracle::random_matrix(4, 3, rng), oracle::random_matrix(4, 3, rng),
                     oracle::random_matrix(4, 3, rng)};
  const auto zero = escl_loss(v, LossConfig{0.05, 0.0, EquivariantVariant::kRelativeDifference});
  const auto none = escl_loss(v, LossConfig{0.05, 2.5e-3, EquivariantVariant::kNone});
  CHECK(zero.breakdown.total == info_nce(v.h, v.h_pos, 0.05));
  CHECK(none.breakdown.total == zero.breakdown.total);
  CHECK(none.d_h == zero.d_h);
  CHECK(none.d_pos == zero.d_pos);
  for (double g : none.d_neg.data()) CHECK(g == 0.0);
}

TEST_CASE("loss gradients match finite differences") {
  RngStream rng(7);
  const Tensor h = oracle::random_matrix(4, 8, rng), p = oracle::random_matrix(4, 8, rng),
               n = oracle::random_matrix(4, 8, rng);
  const auto split = [](std::span<const double> x, std::size_t k) {
    return Tensor({4, 8}, std::vector<double>(x.begin() + 32 * k, x.begin() + 32 * (k + 1)));
  };
  std::vector<double> theta(h.values());
  theta.insert(theta.end(), p.values().begin(), p.values().end());
  theta.insert(theta.end(), n.values().begin(), n.values().end());
  const auto join = [](const LossValue& v) {
    std::vector<double> g(v.d_h.values());
    g.insert(g.end(), v.d_pos.values().begin(), v.d_pos.values().end());
    g.insert(g.end(), v.d_neg.values().begin(), v.d_neg.values().end());
    return g;
  };
  SUBCASE("rd") {
    const auto r = grad_check(
        [&](std::span<const double> x) { return rd_loss(split(x, 0), split(x, 1), split(x, 2)); },
        [&](std::span<const double> x) {
          return join(rd_loss_with_grad(split(x, 0), split(x, 1), split(x, 2)));
        },
        theta);
    CHECK(r.max_rel_error < 1e-4);
  }
  SUBCASE("cossim") {
    const auto r = grad_check(
        [&](std::span<const double> x) {
          return cossim_loss(split(x, 0), split(x, 1), split(x, 2));
        },
        [&](std::span<const double> x) {
          return join(cossim_loss_with_grad(split(x, 0), split(x, 1), split(x, 2)));
        },
        theta);
    CHECK(r.max_rel_error < 1e-4);
  }
  SUBCASE("info_nce") {
    const auto r = grad_check(
        [&](std::span<const double> x) { return info_nce(split(x, 0), split(x, 1), 0.05); },
        [&](std::span<const double> x) {
          return join(info_nce_with_grad(split(x, 0), split(x, 1), 0.05));
        },
        theta);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("variant names round-trip") {
  for (auto v : {EquivariantVariant::kRelativeDifference, EquivariantVariant::kCosSim,
                 EquivariantVariant::kNone}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK(parse_variant("RD") == EquivariantVariant::kRelativeDifference);
}
