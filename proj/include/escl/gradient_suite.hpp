#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "escl/numerics.hpp"

namespace escl {

inline constexpr double kGradientTolerance = 1e-4;

struct GradientCheckEntry {
  std::string name;
  std::size_t trial = 0;
  GradCheckReport report;

  bool passed() const { return report.max_rel_error < kGradientTolerance; }
};

// Finite-difference checks of every analytic gradient in the library:
// a quadratic self-test, InfoNCE, RD, CosSim and the combined loss with
// respect to the embedding rows, the encoder forward pass with respect to
// its parameters, and the combined loss backpropagated into the encoder
// with the dropout masks held fixed. Each trial draws fresh random inputs.
std::vector<GradientCheckEntry> run_gradient_suite(std::size_t trials, std::uint64_t seed,
                                                   double eps = 1e-5);

}  // namespace escl
