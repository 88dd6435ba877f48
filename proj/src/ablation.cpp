#include "escl/ablation.hpp"

#include <cstdio>
#include <future>

#include <json.hpp>

#include "escl/errors.hpp"

namespace escl {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

AblationReport run_ablation(const TrainConfig& base, const std::vector<TokenSequence>& corpus,
                            const Vocabulary& vocab, std::span<const StsPair> eval_pairs,
                            const AblationGrid& grid, std::size_t threads) {
  if (grid.r_high_values.empty() || grid.variants.empty()) {
    throw ConfigError("ablation grid needs at least one r_high value and one variant");
  }
  if (grid.seeds.empty()) throw ConfigError("ablation needs at least one seed");
  if (eval_pairs.size() < 2) throw InputError("ablation needs at least 2 evaluation pairs");

  std::vector<TrainConfig> configs;
  AblationReport report;
  for (double r_high : grid.r_high_values) {
    for (EquivariantVariant variant : grid.variants) {
      for (std::uint64_t seed : grid.seeds) {
        TrainConfig cfg = base;
        cfg.r_high.rate = r_high;
        cfg.loss.variant = variant;
        cfg.seed = seed;
        cfg.checkpoint_path.clear();
        cfg.select_best_on_dev = false;
        cfg.validate();
        configs.push_back(cfg);
        report.runs.push_back({r_high, variant, seed, 0.0});
      }
    }
  }

  const auto run_cell = [&](std::size_t index) {
    const TrainConfig& cfg = configs[index];
    // Snapshots are not needed; score only the final weights.
    TrainConfig quiet = cfg;
    quiet.eval_every = 0;
    const TrainResult result = train(quiet, corpus, vocab, {});
    return evaluate_sts(result.checkpoint.params, eval_pairs, "ablation").rho;
  };

  const std::size_t workers = std::max<std::size_t>(1, threads);
  for (std::size_t begin = 0; begin < configs.size(); begin += workers) {
    const std::size_t end = std::min(configs.size(), begin + workers);
    std::vector<std::future<double>> pending;
    for (std::size_t i = begin; i < end; ++i) {
      pending.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                   run_cell, i));
    }
    for (std::size_t i = begin; i < end; ++i) report.runs[i].rho = pending[i - begin].get();
  }

  for (std::size_t i = 0; i < report.runs.size(); i += grid.seeds.size()) {
    std::vector<double> rhos;
    for (std::size_t k = 0; k < grid.seeds.size(); ++k) rhos.push_back(report.runs[i + k].rho);
    const Summary s = summarize(rhos);
    report.cells.push_back({report.runs[i].r_high, report.runs[i].variant, rhos.size(), s.mean,
                            s.std, s.median});
  }
  return report;
}

std::string AblationReport::to_json() const {
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) {
    runs_json.push_back(
        {{"r_high", r.r_high}, {"variant", to_string(r.variant)}, {"seed", r.seed}, {"rho", r.rho}});
  }
  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells) {
    cells_json.push_back({{"r_high", c.r_high},
                          {"variant", to_string(c.variant)},
                          {"seed_count", c.seed_count},
                          {"mean_rho", c.mean_rho},
                          {"std_rho", c.std_rho},
                          {"median_rho", c.median_rho}});
  }
  return nlohmann::json{{"runs", runs_json}, {"cells", cells_json}}.dump(2);
}

std::string AblationReport::to_table() const {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-8s %-8s %10s %10s %10s\n", "r_high", "variant",
                "seed_count", "mean_rho", "std_rho");
  out += line;
  for (const auto& c : cells) {
    std::snprintf(line, sizeof(line), "%-8s %-8s %10zu %10s %10s\n", fixed(c.r_high, 2).c_str(),
                  to_string(c.variant).c_str(), c.seed_count, fixed(c.mean_rho, 4).c_str(),
                  fixed(c.std_rho, 4).c_str());
    out += line;
  }
  return out;
}

}  // namespace escl
