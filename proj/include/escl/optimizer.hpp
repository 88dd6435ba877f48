#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "escl/encoder.hpp"

namespace escl {

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Adam moments over the flattened parameter vector. Empty for SGD.
struct OptimizerState {
  std::uint64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  bool operator==(const OptimizerState&) const = default;
};

void apply_update(EncoderParams& params, const EncoderGrads& grads,
                  const OptimizerSettings& settings, OptimizerState& state);

}  // namespace escl
