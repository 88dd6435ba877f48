// escl: data generation, training, evaluation, gradient checks and ablation
// sweeps for equivariant self-contrastive sentence encoders.
//
// Machine-readable output is line-delimited JSON on stdout; logs go to stderr.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "escl/ablation.hpp"
#include "escl/checkpoint.hpp"
#include "escl/errors.hpp"
#include "escl/evaluation.hpp"
#include "escl/gradient_suite.hpp"
#include "escl/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void emit(const json& record) { std::cout << record.dump() << std::endl; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Turns leftover `--key value` pairs into config overrides.
void apply_overrides(escl::TrainConfig& config, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& flag = extras[i];
    if (flag.rfind("--", 0) != 0) throw escl::ConfigError("unexpected argument '" + flag + "'");
    std::string key = flag.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw escl::ConfigError("override --" + key + " needs a value");
      value = extras[++i];
    }
    escl::apply_config_override(config, key, value);
  }
}

escl::TrainConfig resolve_config(const std::string& config_path,
                                 const std::vector<std::string>& extras) {
  escl::TrainConfig config;
  if (!config_path.empty()) config = escl::load_train_config(config_path);
  apply_overrides(config, extras);
  config.validate();
  return config;
}

void banner(const std::string& command, const escl::TrainConfig& config) {
  std::cerr << "# escl " << command << " (seed " << config.seed << ")\n"
            << escl::format_train_config(config) << std::flush;
}

struct Dataset {
  escl::Vocabulary vocab;
  std::vector<escl::TokenSequence> corpus;
  std::vector<escl::StsPair> pairs;
};

Dataset load_dataset(const std::string& corpus_path, const std::string& sts_path) {
  const escl::CorpusReport report = escl::read_corpus(corpus_path);
  if (!report.skipped_lines.empty()) {
    std::cerr << "warning: skipped " << report.skipped_lines.size() << " empty line(s) in "
              << corpus_path << "\n";
  }
  Dataset data;
  data.vocab = escl::build_vocab(report.lines);
  data.corpus = escl::tokenize_corpus(report.lines, data.vocab);
  if (!sts_path.empty()) data.pairs = escl::tokenize_pairs(escl::read_sts(sts_path), data.vocab);
  return data;
}

int run_gen_data(std::uint64_t seed, const std::string& out_dir, std::size_t n_train,
                 std::size_t n_pairs, std::size_t vocab_size, bool force) {
  if (n_train == 0 || n_pairs == 0) {
    std::cerr << "error: --n-train and --n-pairs must be at least 1\n";
    return kExitUsage;
  }
  const fs::path dir(out_dir);
  const fs::path corpus = dir / "corpus.txt";
  const fs::path sts = dir / "sts.tsv";
  for (const auto& p : {corpus, sts}) {
    if (fs::exists(p) && !force) {
      std::cerr << "error: " << p.string() << " exists; pass --force to overwrite\n";
      return kExitData;
    }
  }
  std::cerr << "# escl gen-data seed=" << seed << " n_train=" << n_train << " n_pairs=" << n_pairs
            << " vocab_size=" << vocab_size << "\n";
  const escl::SyntheticData data =
      escl::generate_synthetic_corpus(seed, n_train, n_pairs, vocab_size);
  fs::create_directories(dir);
  escl::write_corpus(corpus, data.corpus);
  escl::write_sts(sts, data.pairs);
  emit({{"event", "gen-data"},
        {"seed", seed},
        {"corpus", corpus.string()},
        {"sts", sts.string()},
        {"n_train", data.corpus.size()},
        {"n_pairs", data.pairs.size()}});
  return 0;
}

int run_train(const std::string& config_path, const std::string& corpus_path,
              const std::string& sts_path, const std::vector<std::string>& extras) {
  const escl::TrainConfig config = resolve_config(config_path, extras);
  banner("train", config);
  const Dataset data = load_dataset(corpus_path, sts_path);
  if (!config.checkpoint_path.empty()) {
    const fs::path parent = fs::path(config.checkpoint_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    escl::write_file_atomic(escl::config_path_for(config.checkpoint_path),
                            escl::format_train_config(config));
  }
  const escl::TrainResult result = escl::train(config, data.corpus, data.vocab, data.pairs);
  json summary = {{"event", "train"},
                  {"seed", config.seed},
                  {"steps", result.checkpoint.step},
                  {"checkpoint", config.checkpoint_path}};
  if (!result.trace.steps.empty()) {
    const auto& last = result.trace.steps.back().breakdown;
    summary["info_nce"] = last.info_nce;
    summary["equivariant"] = last.equivariant;
    summary["total"] = last.total;
    summary["dist_pos"] = last.dist_pos;
    summary["dist_neg"] = last.dist_neg;
  }
  if (result.initial_eval) summary["initial_rho"] = result.initial_eval->rho;
  if (result.final_eval) summary["final_rho"] = result.final_eval->rho;
  emit(summary);
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& sts_path,
             const std::string& dataset) {
  const escl::Checkpoint ck = escl::load_checkpoint(checkpoint_path);
  const auto pairs = escl::tokenize_pairs(escl::read_sts(sts_path), ck.vocab);
  const std::string name = dataset.empty() ? fs::path(sts_path).stem().string() : dataset;
  const escl::EvalResult result = escl::evaluate_sts(ck.params, pairs, name);
  emit({{"event", "eval"},
        {"dataset", result.dataset},
        {"rho", result.rho},
        {"n_pairs", result.n_pairs},
        {"checkpoint", checkpoint_path}});
  return 0;
}

int run_gradcheck(std::size_t trials, std::uint64_t seed) {
  std::cerr << "# escl gradcheck trials=" << trials << " seed=" << seed << " eps=1e-5 tol="
            << escl::kGradientTolerance << "\n";
  bool ok = true;
  for (const auto& entry : escl::run_gradient_suite(trials, seed)) {
    ok = ok && entry.passed();
    emit({{"event", "gradcheck"},
          {"name", entry.name},
          {"trial", entry.trial},
          {"max_rel_error", entry.report.max_rel_error},
          {"components", entry.report.components_checked},
          {"passed", entry.passed()}});
  }
  return ok ? 0 : kExitNumeric;
}

int run_ablate(const std::string& config_path, const std::string& corpus_path,
               const std::string& sts_path, const std::string& rates, const std::string& variants,
               const std::string& seeds, std::size_t threads, const std::string& out,
               const std::vector<std::string>& extras) {
  escl::TrainConfig config = resolve_config(config_path, extras);
  escl::AblationGrid grid;
  try {
    for (const auto& r : split_list(rates)) grid.r_high_values.push_back(std::stod(r));
    for (const auto& s : split_list(seeds)) grid.seeds.push_back(std::stoull(s));
  } catch (const std::exception&) {
    throw escl::ConfigError("--rates must be comma-separated reals and --seeds integers");
  }
  for (const auto& v : split_list(variants)) grid.variants.push_back(escl::parse_variant(v));
  banner("ablate", config);
  std::cerr << "# grid rates=" << rates << " variants=" << variants << " seeds=" << seeds << "\n";

  const Dataset data = load_dataset(corpus_path, sts_path);
  const escl::AblationReport report =
      escl::run_ablation(config, data.corpus, data.vocab, data.pairs, grid, threads);

  const fs::path prefix(out);
  if (!prefix.parent_path().empty()) fs::create_directories(prefix.parent_path());
  escl::write_file_atomic(fs::path(out + ".json"), report.to_json() + "\n");
  escl::write_file_atomic(fs::path(out + ".txt"), report.to_table());
  escl::write_file_atomic(fs::path(out + ".config"), escl::format_train_config(config));
  std::cerr << report.to_table();
  for (const auto& cell : report.cells) {
    emit({{"event", "ablate"},
          {"r_high", cell.r_high},
          {"variant", escl::to_string(cell.variant)},
          {"seed_count", cell.seed_count},
          {"mean_rho", cell.mean_rho},
          {"std_rho", cell.std_rho}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant self-contrastive sentence encoder toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic corpus.txt and sts.tsv");
  std::uint64_t gen_seed = 1;
  std::string out_dir = "data";
  std::size_t n_train = 512, n_pairs = 256, vocab_size = 200;
  bool force = false;
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  gen->add_option("--n-train", n_train, "Training sentences")->capture_default_str();
  gen->add_option("--n-pairs", n_pairs, "Evaluation pairs")->capture_default_str();
  gen->add_option("--vocab-size", vocab_size, "Vocabulary size including 2 reserved ids")
      ->capture_default_str();
  gen->add_flag("--force", force, "Overwrite existing files");

  auto* train = app.add_subcommand(
      "train", "Train an encoder; extra --key value pairs override config keys");
  std::string config_path, corpus_path, sts_path;
  train->add_option("--config", config_path, "Config file (key = value lines)");
  train->add_option("--corpus", corpus_path, "Corpus file, one sentence per line")->required();
  train->add_option("--sts", sts_path, "STS file used for dev snapshots and the final score");
  train->allow_extras();
  train->footer("Config keys: batch_size steps learning_rate optimizer adam_beta1 adam_beta2\n"
                "adam_epsilon r_low r_high loss.temperature loss.lambda loss.variant seed\n"
                "eval_every checkpoint_path embed_dim output_dim select_best_on_dev");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on an STS file");
  std::string checkpoint_path, eval_sts, dataset;
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--sts", eval_sts, "STS file")->required();
  eval->add_option("--dataset", dataset, "Dataset name in the report (default: file stem)");

  auto* grad = app.add_subcommand("gradcheck", "Check analytic gradients by finite differences");
  std::size_t trials = 5;
  std::uint64_t grad_seed = 1;
  grad->add_option("--trials", trials, "Random instances per check")->capture_default_str();
  grad->add_option("--seed", grad_seed, "Seed for the random instances")->capture_default_str();

  auto* ablate = app.add_subcommand(
      "ablate", "Sweep r_high and equivariant loss variants; extra --key value pairs override");
  std::string ab_config, ab_corpus, ab_sts, rates = "0.35,0.40,0.45,0.50", variants = "rd,cossim",
                                             seeds = "1,2,3,4,5", out = "ablation";
  std::size_t threads = 1;
  ablate->add_option("--config", ab_config, "Base config file");
  ablate->add_option("--corpus", ab_corpus, "Corpus file")->required();
  ablate->add_option("--sts", ab_sts, "STS file")->required();
  ablate->add_option("--rates", rates, "Comma-separated r_high values")->capture_default_str();
  ablate->add_option("--variants", variants, "Comma-separated: rd, cossim, none")
      ->capture_default_str();
  ablate->add_option("--seeds", seeds, "Comma-separated seeds")->capture_default_str();
  ablate->add_option("--threads", threads, "Parallel cells")->capture_default_str();
  ablate->add_option("--out", out, "Report path prefix (.json, .txt)")->capture_default_str();
  ablate->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return run_gen_data(gen_seed, out_dir, n_train, n_pairs, vocab_size, force);
    if (*train) return run_train(config_path, corpus_path, sts_path, train->remaining());
    if (*eval) return run_eval(checkpoint_path, eval_sts, dataset);
    if (*grad) return run_gradcheck(trials, grad_seed);
    if (*ablate) {
      return run_ablate(ab_config, ab_corpus, ab_sts, rates, variants, seeds, threads, out,
                        ablate->remaining());
    }
  } catch (const escl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const escl::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const escl::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
