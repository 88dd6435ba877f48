#include "escl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "escl/errors.hpp"

namespace escl {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw DimensionError("tensor data length does not match its shape");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const { return shape_.empty() ? 0 : shape_.front(); }

std::size_t Tensor::cols() const {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  return std::span<double>(data_).subspan(r * cols(), cols());
}

std::span<const double> Tensor::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols(), cols());
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

RngStream RngStream::derive(std::uint64_t key) const {
  return RngStream(seed_, mix64(stream_id_ ^ mix64(key + 0x632be59bd9b4e019ULL)));
}

RngStream RngStream::derive(std::string_view label) const { return derive(fnv1a(label)); }

std::uint64_t RngStream::next_u64() {
  const std::uint64_t key = mix64(seed_) ^ mix64(stream_id_ + 0xd1b54a32d192ed03ULL);
  return mix64(key + mix64(counter_++));
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("next_below: bound must be positive");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

void DropoutSpec::validate() const {
  if (!(rate >= 0.0 && rate < 1.0)) {
    std::ostringstream msg;
    msg << "dropout rate must lie in [0, 1), got " << rate;
    throw ConfigError(msg.str());
  }
}

DropoutMask DropoutMask::ones(std::vector<std::size_t> shape) {
  return DropoutMask{Tensor(std::move(shape), 1.0), 0.0};
}

DropoutMask sample_dropout_mask(std::vector<std::size_t> shape, DropoutSpec spec,
                                const RngStream& rng) {
  spec.validate();
  DropoutMask mask{Tensor(std::move(shape), 1.0), spec.rate};
  if (spec.rate == 0.0) return mask;
  RngStream stream = rng;
  const double keep = spec.keep_scale();
  for (double& v : mask.values.data()) {
    v = stream.next_uniform() < spec.rate ? 0.0 : keep;
  }
  return mask;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: vectors have lengths " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  if (a.empty()) throw DimensionError("cosine_similarity: empty vectors");
  const double aa = dot(a, a);
  const double bb = dot(b, b);
  if (aa == 0.0 || bb == 0.0) {
    throw DegenerateInputError("cosine_similarity: zero-norm input vector");
  }
  // sqrt(fl(x*x)) == x, so sim(a, a) evaluates to exactly 1.
  return std::clamp(dot(a, b) / std::sqrt(aa * bb), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) hold a tie; ranks are 1-based.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw DimensionError("pearson: need at least two observations");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateInputError("correlation undefined: a list has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> mu, std::span<const double> nu) {
  if (mu.size() != nu.size()) {
    throw DimensionError("spearman_rho: lists have lengths " + std::to_string(mu.size()) +
                         " and " + std::to_string(nu.size()));
  }
  const std::vector<double> rm = average_ranks(mu);
  const std::vector<double> rn = average_ranks(nu);
  return pearson(rm, rn);
}

GradCheckReport grad_check(const ScalarFn& loss, const GradientFn& gradient,
                           std::vector<double> params, const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
  const std::vector<double> analytic = gradient(params);
  if (analytic.size() != params.size()) {
    throw DimensionError("grad_check: gradient length differs from parameter count");
  }

  std::vector<std::size_t> indices(params.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (indices.size() > options.max_components) {
    RngStream rng = RngStream(options.seed).derive("grad_check");
    rng.shuffle(indices);
    indices.resize(options.max_components);
    std::sort(indices.begin(), indices.end());
  }

  auto probe = [&](std::size_t index) {
    const double value = loss(params);
    if (!std::isfinite(value)) {
      throw NumericError("grad_check: non-finite loss when probing component " +
                         std::to_string(index));
    }
    return value;
  };

  GradCheckReport report;
  for (std::size_t index : indices) {
    const double original = params[index];
    params[index] = original + options.eps;
    const double plus = probe(index);
    params[index] = original - options.eps;
    const double minus = probe(index);
    params[index] = original;

    const double numeric = (plus - minus) / (2.0 * options.eps);
    const double a = analytic[index];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    if (rel > report.max_rel_error || report.components_checked == 0) {
      report.max_rel_error = rel;
      report.worst_index = index;
    }
    ++report.components_checked;
  }
  return report;
}

}  // namespace escl
