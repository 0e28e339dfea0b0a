#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protochaos/chaos.hpp"
#include "protochaos/data.hpp"
#include "protochaos/episodes.hpp"
#include "protochaos/trainer.hpp"

namespace protochaos {

enum class DataSource { Unset, File, Synthetic };

/// Fully resolved run configuration: the union of data source, split,
/// episode, chaos, model, and training settings. Populated from a config
/// file of flat dotted keys (`key = value`, `#` comments), then overridden
/// by CLI flags.
struct RunConfig {
  DataSource source = DataSource::Unset;
  bool saw_file_source = false;       // set when data.path appears
  bool saw_synthetic_source = false;  // set when any data.* synthetic key appears
  std::filesystem::path data_path;
  SyntheticSpec synth;
  std::uint64_t data_seed = 1234;

  std::array<double, 3> split_fractions{0.7, 0.15, 0.15};
  std::uint64_t split_seed = 1234;

  EpisodeSpec episode;
  int meta_batch = 1;
  ChaosConfig chaos;
  int proj_dim = 64;
  bool bias = true;

  int episodes = 10000;
  int eval_every = 500;
  int eval_episodes = 200;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  std::vector<double> sweep_lambdas{0.0, 0.05, 0.10, 0.12, 0.15, 0.18, 0.20, 0.30, 0.40};

  /// Requires exactly one data source and validates every sub-config.
  void validate() const;

  TrainConfig to_train_config() const;

  /// Loads or generates the configured dataset.
  Dataset resolve_dataset() const;

  /// Every resolved key, in documented order, for the run manifest.
  std::vector<std::pair<std::string, std::string>> manifest_entries() const;
};

/// Applies one `key = value` pair; throws ValidationError naming the key on
/// unknown keys or unparseable values.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

RunConfig parse_config_file(const std::filesystem::path& path);

std::vector<double> parse_lambda_list(std::string_view text);

}  // namespace protochaos
