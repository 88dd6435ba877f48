#include <doctest.h>

#include <cmath>

#include "escl/errors.hpp"
#include "escl/numerics.hpp"
#include "oracles.hpp"

using namespace escl;

TEST_CASE("cosine similarity of small vectors") {
  const std::vector<double> x{1, 0}, y{0, 1}, z{1, 1};
  CHECK(cosine_similarity(x, x) == 1.0);
  CHECK(cosine_similarity(x, y) == 0.0);
  CHECK(cosine_similarity(z, x) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("cosine similarity rejects zero and mismatched vectors") {
  const std::vector<double> zero{0, 0}, x{1, 0}, longer{1, 0, 0};
  CHECK_THROWS_AS(cosine_similarity(zero, x), DegenerateInputError);
  CHECK_THROWS_AS(cosine_similarity(x, longer), DimensionError);
}

TEST_CASE("spearman on hand-ranked lists") {
  const std::vector<double> a{1, 2, 3}, b{10, 20, 30}, c{3, 2, 1};
  CHECK(spearman_rho(a, b) == doctest::Approx(1.0));
  CHECK(spearman_rho(a, c) == doctest::Approx(-1.0));
  const std::vector<double> d{1, 2, 3, 4}, e{2, 1, 4, 3};
  CHECK(spearman_rho(d, e) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("spearman errors") {
  const std::vector<double> flat{2, 2, 2}, a{1, 2, 3}, b{1, 2};
  CHECK_THROWS_AS(spearman_rho(flat, a), DegenerateInputError);
  CHECK_THROWS_AS(spearman_rho(a, b), DimensionError);
}

TEST_CASE("average ranks share tied positions") {
  const std::vector<double> v{5, 1, 5, 3};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("spearman matches brute-force ranking with ties") {
  RngStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.next_below(7);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.next_below(4));
      b[i] = static_cast<double>(rng.next_below(4));
    }
    const auto ra = oracle::ranks(a), rb = oracle::ranks(b);
    if (std::equal(ra.begin() + 1, ra.end(), ra.begin()) ||
        std::equal(rb.begin() + 1, rb.end(), rb.begin())) {
      continue;
    }
    CHECK(std::abs(spearman_rho(a, b) - oracle::spearman(a, b)) < 1e-12);
  }
}

TEST_CASE("spearman is invariant under strictly increasing maps") {
  RngStream rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(8), b(8), fa(8);
    for (std::size_t i = 0; i < 8; ++i) {
      a[i] = rng.next_uniform(-2, 2);
      b[i] = rng.next_uniform(-2, 2);
      fa[i] = std::exp(3 * a[i]) + a[i] * a[i] * a[i];
    }
    CHECK(average_ranks(a) == average_ranks(fa));
    CHECK(spearman_rho(a, b) == spearman_rho(fa, b));
  }
}

TEST_CASE("dropout mask values") {
  const auto ones = sample_dropout_mask({2, 3}, DropoutSpec{0.0}, RngStream(1));
  for (double v : ones.values.data()) CHECK(v == 1.0);

  const auto half = sample_dropout_mask({2, 3}, DropoutSpec{0.5}, RngStream(1));
  for (double v : half.values.data()) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("dropout mask drop fraction follows the rate") {
  const auto mask = sample_dropout_mask({1000, 64}, DropoutSpec{0.45}, RngStream(7));
  std::size_t zeros = 0;
  for (double v : mask.values.data()) zeros += v == 0.0;
  const double fraction = static_cast<double>(zeros) / 64000.0;
  CHECK(fraction == doctest::Approx(0.45).epsilon(0.02 / 0.45));
}

TEST_CASE("dropout mask is a pure function of its stream") {
  const RngStream rng(3);
  const auto a = sample_dropout_mask({4, 5}, DropoutSpec{0.3}, rng);
  const auto b = sample_dropout_mask({4, 5}, DropoutSpec{0.3}, rng);
  const auto c = sample_dropout_mask({4, 5}, DropoutSpec{0.3}, rng.derive(1));
  CHECK(a.values == b.values);
  CHECK_FALSE(a.values == c.values);
}

TEST_CASE("dropout rate outside [0, 1) is rejected") {
  CHECK_THROWS_AS(sample_dropout_mask({2, 2}, DropoutSpec{1.0}, RngStream(1)), ConfigError);
  CHECK_THROWS_AS(sample_dropout_mask({2, 2}, DropoutSpec{-0.1}, RngStream(1)), ConfigError);
}

TEST_CASE("derived streams differ by key and label") {
  const RngStream root(5);
  RngStream a = root.derive(1), b = root.derive(2), c = root.derive("masks"), a2 = root.derive(1);
  const auto x = a.next_u64();
  CHECK(x == a2.next_u64());
  CHECK(x != b.next_u64());
  CHECK(x != c.next_u64());
}

TEST_CASE("next_below stays in range") {
  RngStream rng(9);
  for (int i = 0; i < 1000; ++i) CHECK(rng.next_below(7) < 7);
}

TEST_CASE("grad_check on a quadratic") {
  const auto report = grad_check(
      [](std::span<const double> w) { return w[0] * w[0]; },
      [](std::span<const double> w) { return std::vector<double>{2 * w[0]}; }, {3.0});
  CHECK(report.max_rel_error < 1e-8);
  CHECK(report.components_checked == 1);
}

TEST_CASE("grad_check finds a wrong gradient") {
  const auto report = grad_check(
      [](std::span<const double> w) { return w[0] * w[0] + 3 * w[1]; },
      [](std::span<const double> w) { return std::vector<double>{2 * w[0], 2.0}; }, {1.0, 2.0});
  CHECK(report.max_rel_error > 0.1);
  CHECK(report.worst_index == 1);
}

TEST_CASE("grad_check samples large parameter vectors") {
  std::vector<double> w(1000, 0.5);
  const auto report = grad_check(
      [](std::span<const double> v) {
        double s = 0;
        for (double x : v) s += x * x;
        return s;
      },
      [](std::span<const double> v) {
        std::vector<double> g(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) g[i] = 2 * v[i];
        return g;
      },
      w);
  CHECK(report.components_checked == 200);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("grad_check rejects a non-finite loss") {
  CHECK_THROWS_AS(grad_check([](std::span<const double> w) { return std::log(w[0]); },
                             [](std::span<const double>) { return std::vector<double>{1.0}; },
                             {-1.0}),
                  NumericError);
}
