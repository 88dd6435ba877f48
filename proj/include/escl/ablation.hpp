#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "escl/evaluation.hpp"
#include "escl/training.hpp"

namespace escl {

struct AblationGrid {
  std::vector<double> r_high_values;
  std::vector<EquivariantVariant> variants;
  std::vector<std::uint64_t> seeds;
};

// One trained model.
struct AblationRun {
  double r_high = 0.0;
  EquivariantVariant variant = EquivariantVariant::kRelativeDifference;
  std::uint64_t seed = 0;
  double rho = 0.0;
};

// Seeds of one (r_high, variant) cell pooled together.
struct AblationCell {
  double r_high = 0.0;
  EquivariantVariant variant = EquivariantVariant::kRelativeDifference;
  std::size_t seed_count = 0;
  double mean_rho = 0.0;
  double std_rho = 0.0;
  double median_rho = 0.0;
};

struct AblationReport {
  // Grid order: r_high outermost, then variant, then seed.
  std::vector<AblationRun> runs;
  std::vector<AblationCell> cells;

  std::string to_json() const;
  // Columns r_high, variant, seed_count, mean_rho, std_rho.
  std::string to_table() const;
};

// Trains one model per (r_high, variant, seed) on `corpus` and scores each
// on `eval_pairs`. Cells run on up to `threads` workers; results are joined
// in grid order so the report does not depend on scheduling.
AblationReport run_ablation(const TrainConfig& base, const std::vector<TokenSequence>& corpus,
                            const Vocabulary& vocab, std::span<const StsPair> eval_pairs,
                            const AblationGrid& grid, std::size_t threads = 1);

}  // namespace escl
