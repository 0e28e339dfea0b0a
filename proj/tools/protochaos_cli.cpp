// Command-line front end: gen-data, train, eval, sweep, gradcheck.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error, 3 tolerance
// failure (gradcheck). Primary outputs are written to a temp name and
// renamed on success, so failed runs never leave truncated artifacts.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "protochaos/checkpoint.hpp"
#include "protochaos/config.hpp"
#include "protochaos/data.hpp"
#include "protochaos/gradcheck.hpp"
#include "protochaos/metrics.hpp"
#include "protochaos/model.hpp"
#include "protochaos/report.hpp"
#include "protochaos/trainer.hpp"
#include "protochaos/version.hpp"

namespace fs = std::filesystem;
using namespace protochaos;

namespace {

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> data_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_way, k_shot, q_count, episodes;
  std::optional<double> lambda;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Config file (key = value, dotted keys)");
  cmd->add_option("--data", flags.data_path, "Embedding CSV path (overrides data.path)");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides train.seed)");
  cmd->add_option("--n-way", flags.n_way, "Classes per episode");
  cmd->add_option("--k-shot", flags.k_shot, "Support records per class");
  cmd->add_option("--q-count", flags.q_count, "Query records per class");
  cmd->add_option("--lambda", flags.lambda, "Chaos intensity");
  cmd->add_option("--episodes", flags.episodes, "Training episodes");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config;
  if (flags.config_path) config = parse_config_file(*flags.config_path);
  if (flags.data_path) apply_config_value(config, "data.path", *flags.data_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.n_way) config.episode.n_way = *flags.n_way;
  if (flags.k_shot) config.episode.k_shot = *flags.k_shot;
  if (flags.q_count) config.episode.q_count = *flags.q_count;
  if (flags.lambda) config.chaos.lambda = *flags.lambda;
  if (flags.episodes) config.episodes = *flags.episodes;
  return config;
}

std::vector<std::pair<std::string, std::string>> run_manifest(const RunConfig& config,
                                                              const Dataset& full,
                                                              const DataSplit& parts) {
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("version", kVersion);
  entries.emplace_back("train.seed", std::to_string(config.seed));
  for (auto& e : config.manifest_entries()) entries.push_back(std::move(e));
  entries.emplace_back("data.digest", dataset_digest(full));
  entries.emplace_back("data.train_digest", dataset_digest(parts.train));
  entries.emplace_back("data.val_digest", dataset_digest(parts.val));
  entries.emplace_back("data.test_digest", dataset_digest(parts.test));
  return entries;
}

int cmd_gen_data(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out) {
  const Dataset ds = generate_synthetic(spec, seed);
  atomic_write_text(out, to_csv(ds));
  std::cout << "wrote " << ds.size() << " records (" << ds.class_count() << " classes, dim "
            << ds.dim() << ") to " << out << "\n";
  return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& out_dir) {
  RunConfig config = resolve_config(flags);
  config.validate();
  const Dataset full = config.resolve_dataset();
  const DataSplit parts = split(full, config.split_fractions, config.split_seed);

  TrainHooks hooks;
  hooks.on_eval = [](const HistoryRow& row) {
    std::cout << "episode " << row.episode << "  train_loss " << format_fixed6(row.train_loss)
              << "  val_accuracy " << format_fixed6(row.accuracy) << "  val_macro_f1 "
              << format_fixed6(row.macro_f1) << "\n";
  };
  const RunResult run = train_run(config.to_train_config(), parts.train, parts.val, hooks);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  atomic_write_text(dir / "checkpoint.txt", render_checkpoint(run.head));
  atomic_write_text(dir / "checkpoint_best.txt", render_checkpoint(run.best_head));
  atomic_write_text(dir / "history.csv", render_history_csv(run.history));

  auto manifest = run_manifest(config, full, parts);
  for (auto& e : run.manifest) {
    if (e.first == "version" || e.first.rfind("data.", 0) == 0) continue;  // already present
    manifest.push_back(std::move(e));
  }
  manifest.emplace_back("result.best_episode", std::to_string(run.best_episode));
  manifest.emplace_back("result.best_val_accuracy", format_fixed6(run.best_accuracy));
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.3f", run.wall_seconds);
  manifest.emplace_back("result.wall_seconds", wall);
  atomic_write_text(dir / "manifest.txt", render_manifest(manifest));

  std::cout << "final checkpoint: " << (dir / "checkpoint.txt").string()
            << "\nbest validation accuracy " << format_fixed6(run.best_accuracy)
            << " at episode " << run.best_episode << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint,
             const std::string& split_part, int episodes, std::uint64_t seed,
             const std::string& out_dir) {
  RunConfig config = resolve_config(flags);
  const ProjectionHead head = load_checkpoint(checkpoint);

  Dataset data = config.resolve_dataset();
  if (split_part != "none") {
    const DataSplit parts = split(data, config.split_fractions, config.split_seed);
    if (split_part == "train") {
      data = parts.train;
    } else if (split_part == "val") {
      data = parts.val;
    } else if (split_part == "test") {
      data = parts.test;
    } else {
      throw ValidationError("--split must be none, train, val or test");
    }
  }
  if (data.dim() != head.in_dim()) {
    throw ValidationError("checkpoint expects dimension " + std::to_string(head.in_dim()) +
                          " but the dataset has " + std::to_string(data.dim()));
  }

  const EvalResult result = evaluate(head, data, config.episode, episodes, seed);

  // Cluster-shape statistics over every projected record, chaos-free.
  Eigen::MatrixXd embedded(head.out_dim(), static_cast<Eigen::Index>(data.size()));
  std::vector<int> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    embedded.col(static_cast<Eigen::Index>(i)) = project(head, data.record(i).features);
    labels[i] = data.class_index(data.record(i).label);
  }
  const ClusterGeometry geometry =
      cluster_geometry(embedded, labels, data.class_count());

  const std::string report = render_metrics_report(result, geometry);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  atomic_write_text(dir / "metrics.txt", report);
  atomic_write_text(dir / "confusion.csv", render_confusion_csv(result.confusion));

  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("version", kVersion);
  manifest.emplace_back("eval.checkpoint", checkpoint);
  manifest.emplace_back("eval.split", split_part);
  manifest.emplace_back("eval.episodes", std::to_string(episodes));
  manifest.emplace_back("eval.seed", std::to_string(seed));
  manifest.emplace_back("episode.n_way", std::to_string(config.episode.n_way));
  manifest.emplace_back("episode.k_shot", std::to_string(config.episode.k_shot));
  manifest.emplace_back("episode.q_count", std::to_string(config.episode.q_count));
  manifest.emplace_back("data.digest", dataset_digest(data));
  atomic_write_text(dir / "eval_manifest.txt", render_manifest(manifest));

  std::cout << report;
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::optional<std::string>& lambdas_flag,
              int jobs, const std::string& out_dir) {
  RunConfig config = resolve_config(flags);
  if (lambdas_flag) config.sweep_lambdas = parse_lambda_list(*lambdas_flag);
  config.validate();

  const Dataset full = config.resolve_dataset();
  const DataSplit parts = split(full, config.split_fractions, config.split_seed);
  const SweepResult result = sweep(config.to_train_config(), config.sweep_lambdas,
                                   parts.train, parts.val, parts.test, jobs);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  atomic_write_text(dir / "sweep.csv", render_sweep_csv(result));
  auto manifest = run_manifest(config, full, parts);
  manifest.emplace_back("sweep.jobs", std::to_string(jobs));
  atomic_write_text(dir / "manifest.txt", render_manifest(manifest));

  std::cout << render_sweep_csv(result);
  for (const SweepFailure& failure : result.failures) {
    std::cerr << "arm " << failure.arm << " (lambda " << failure.lambda
              << ") failed: " << failure.message << "\n";
  }
  return result.failures.empty() ? 0 : 2;
}

int cmd_gradcheck(const GradcheckOptions& options) {
  const GradcheckReport report = run_gradcheck(options);
  std::cout << report.summary();
  return report.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Episodic few-shot training head with logistic-map chaos regularization"};
  app.require_subcommand(1);

  // gen-data
  SyntheticSpec gen_spec;
  std::uint64_t gen_seed = 1234;
  std::string gen_out;
  int gen_dim = 32;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic embedding CSV");
  gen->add_option("--classes", gen_spec.num_classes, "Number of classes");
  gen->add_option("--per-class", gen_spec.per_class, "Records per class");
  gen->add_option("--dim", gen_dim, "Feature dimension");
  gen->add_option("--separation", gen_spec.separation, "Centroid distance in sigmas");
  gen->add_option("--sigma", gen_spec.sigma, "Per-coordinate standard deviation");
  gen->add_option("--outlier-fraction", gen_spec.outlier_fraction, "Contaminated share");
  gen->add_option("--outlier-scale", gen_spec.outlier_scale, "Sigma multiplier for outliers");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output CSV path")->required();

  // train
  CommonFlags train_flags;
  std::string train_out = "out";
  CLI::App* train = app.add_subcommand("train", "Train a projection head episodically");
  add_common(train, train_flags);
  train->add_option("--out", train_out, "Output directory");

  // eval
  CommonFlags eval_flags;
  std::string eval_checkpoint;
  std::string eval_split = "none";
  int eval_episodes = 200;
  std::uint64_t eval_seed = 0;
  std::string eval_out = "out";
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on labeled embeddings");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
  eval->add_option("--split", eval_split,
                   "Evaluate on a partition (none, train, val, test) of the data");
  eval->add_option("--eval-episodes", eval_episodes, "Evaluation episode count");
  eval->add_option("--eval-seed", eval_seed, "Evaluation episode seed");
  eval->add_option("--out", eval_out, "Output directory");

  // sweep
  CommonFlags sweep_flags;
  std::optional<std::string> sweep_lambdas;
  int sweep_jobs = 1;
  std::string sweep_out = "out";
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Train and score one arm per lambda");
  add_common(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "Comma-separated chaos intensities");
  sweep_cmd->add_option("--jobs", sweep_jobs, "Max concurrent arms")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep_out, "Output directory");

  // gradcheck
  GradcheckOptions gc;
  int gc_dim = 16, gc_proj = 8;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Compare analytic gradients to finite differences");
  gradcheck->add_option("--seed", gc.seed, "Fixture seed");
  gradcheck->add_option("--fixtures", gc.fixtures, "Number of fixtures");
  gradcheck->add_option("--n-way", gc.n_way, "Classes per fixture episode");
  gradcheck->add_option("--k-shot", gc.k_shot, "Support per class");
  gradcheck->add_option("--q-count", gc.q_count, "Queries per class");
  gradcheck->add_option("--dim", gc_dim, "Feature dimension");
  gradcheck->add_option("--proj-dim", gc_proj, "Projection dimension");
  gradcheck->add_option("--step", gc.fd_step, "Finite-difference step");
  gradcheck->add_option("--tol", gc.tolerance, "Relative-error tolerance");
  gradcheck->add_flag("--corrupt", gc.corrupt,
                      "Deliberately corrupt one analytic entry (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      gen_spec.dim = gen_dim;
      return cmd_gen_data(gen_spec, gen_seed, gen_out);
    }
    if (train->parsed()) {
      return cmd_train(train_flags, train_out);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_flags, eval_checkpoint, eval_split, eval_episodes, eval_seed,
                      eval_out);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_flags, sweep_lambdas, sweep_jobs, sweep_out);
    }
    if (gradcheck->parsed()) {
      gc.feature_dim = gc_dim;
      gc.proj_dim = gc_proj;
      return cmd_gradcheck(gc);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
