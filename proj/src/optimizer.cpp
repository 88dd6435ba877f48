#include "escl/optimizer.hpp"

#include <cmath>

#include "escl/errors.hpp"

namespace escl {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

void OptimizerSettings::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be non-negative");
  }
  if (kind == OptimizerKind::kAdam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  }
}

void apply_update(EncoderParams& params, const EncoderGrads& grads,
                  const OptimizerSettings& settings, OptimizerState& state) {
  std::vector<double> theta = params.flatten();
  const std::vector<double> g = grads.flatten();
  if (g.size() != theta.size()) throw DimensionError("apply_update: gradient size mismatch");
  ++state.t;

  if (settings.kind == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= settings.learning_rate * g[k];
  } else {
    if (state.m.empty()) {
      state.m.assign(theta.size(), 0.0);
      state.v.assign(theta.size(), 0.0);
    }
    if (state.m.size() != theta.size() || state.v.size() != theta.size()) {
      throw DimensionError("apply_update: optimizer state does not match parameter count");
    }
    const double t = static_cast<double>(state.t);
    const double correction1 = 1.0 - std::pow(settings.beta1, t);
    const double correction2 = 1.0 - std::pow(settings.beta2, t);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      state.m[k] = settings.beta1 * state.m[k] + (1.0 - settings.beta1) * g[k];
      state.v[k] = settings.beta2 * state.v[k] + (1.0 - settings.beta2) * g[k] * g[k];
      const double m_hat = state.m[k] / correction1;
      const double v_hat = state.v[k] / correction2;
      theta[k] -= settings.learning_rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
    }
  }
  params.assign(theta);
}

}  // namespace escl
