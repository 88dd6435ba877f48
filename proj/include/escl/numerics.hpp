#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace escl {

// Dense row-major tensor of doubles. Rank 1 and rank 2 cover everything the
// encoder and the losses need.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Counter-based random stream. A stream is a plain value: drawing advances
// only this copy, and derive() produces an independent child stream keyed by
// an integer or a label, so masks and shuffles can be addressed by
// (step, sentence, view) without depending on iteration order.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  RngStream derive(std::uint64_t key) const;
  RngStream derive(std::string_view label) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double next_uniform();
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }
  // Uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[next_below(i)]);
    }
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
};

struct DropoutSpec {
  double rate = 0.0;

  // Throws ConfigError unless 0 <= rate < 1.
  void validate() const;
  double keep_scale() const { return 1.0 / (1.0 - rate); }
};

// Inverted-dropout mask: entries are 0 or 1/(1 - rate).
struct DropoutMask {
  Tensor values;
  double rate = 0.0;

  static DropoutMask ones(std::vector<std::size_t> shape);
};

DropoutMask sample_dropout_mask(std::vector<std::size_t> shape, DropoutSpec spec,
                                const RngStream& rng);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// a.b / (|a||b|). Throws DimensionError on length mismatch and
// DegenerateInputError on a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Ranks starting at 1; ties share the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

// Product-moment correlation. Throws DegenerateInputError if either list has
// zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Spearman's rank correlation with average-rank ties.
double spearman_rho(std::span<const double> mu, std::span<const double> nu);

struct GradCheckOptions {
  double eps = 1e-5;
  // Checks every component when the parameter count is at most this;
  // otherwise a random subset of this size.
  std::size_t max_components = 200;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t components_checked = 0;
  std::size_t worst_index = 0;
};

using ScalarFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

// Compares `gradient` against central differences of `loss`. The relative
// error per component is |g - n| / max(1e-8, |g| + |n|). Throws NumericError
// if the loss is non-finite at any probe point.
GradCheckReport grad_check(const ScalarFn& loss, const GradientFn& gradient,
                           std::vector<double> params, const GradCheckOptions& options = {});

}  // namespace escl
