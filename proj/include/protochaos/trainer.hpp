#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "protochaos/chaos.hpp"
#include "protochaos/data.hpp"
#include "protochaos/episodes.hpp"
#include "protochaos/metrics.hpp"
#include "protochaos/model.hpp"

namespace protochaos {

enum class OptimizerKind { Adam, SgdMomentum };

const char* optimizer_name(OptimizerKind kind);

/// Stream indices for derive_seed(config.seed, index). Fixed so that a run
/// is reproducible from its master seed alone, and so that toggling the
/// chaos module cannot shift episode sampling.
namespace streams {
inline constexpr std::uint64_t kHeadInit = 0;
inline constexpr std::uint64_t kTrainEpisodes = 1;
inline constexpr std::uint64_t kChaosSeed = 2;
inline constexpr std::uint64_t kValidation = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kSweepEval = 5;
inline constexpr std::uint64_t kSweepArmBase = 100;  // arm i -> kSweepArmBase + i
}  // namespace streams

struct TrainConfig {
  int episodes = 10000;
  int meta_batch = 1;  // episodes averaged per parameter update
  int eval_every = 500;
  int eval_episodes = 200;

  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // sgd-momentum only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  std::uint64_t seed = 0;
  EpisodeSpec spec;
  ChaosConfig chaos;
  int proj_dim = 64;
  bool bias = true;

  void validate() const;
};

/// Moment accumulators mirroring the head's parameter shapes. Adam uses
/// both; sgd-momentum uses the first as velocity.
struct OptimizerState {
  Eigen::MatrixXd m_weight, v_weight;
  Eigen::VectorXd m_bias, v_bias;
  double m_log_tau = 0.0, v_log_tau = 0.0;
  long step_count = 0;

  static OptimizerState zero(const ProjectionHead& head);
};

void optimizer_step(OptimizerState& state, ProjectionHead& head, const Gradients& grads,
                    const TrainConfig& config);

struct HistoryRow {
  int episode = 0;
  double train_loss = 0.0;  // mean episode loss since the previous row
  double accuracy = 0.0;    // validation metrics, chaos disabled
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

struct RunResult {
  ProjectionHead head;       // final parameters
  ProjectionHead best_head;  // best validation accuracy seen
  int best_episode = 0;
  double best_accuracy = 0.0;
  std::vector<HistoryRow> history;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> manifest;
};

struct TrainHooks {
  /// Fires after every optimizer update with the episode count consumed.
  std::function<void(int episodes_done, const ProjectionHead&)> on_step;
  /// Fires after every validation pass.
  std::function<void(const HistoryRow&)> on_eval;
};

/// Episodic optimization loop. Chaos (at config.chaos.lambda) is live for
/// training forwards only; the periodic validation runs with it disabled.
/// Fully deterministic given (config, seed, datasets).
RunResult train_run(const TrainConfig& config, const Dataset& train, const Dataset& val,
                    const TrainHooks& hooks = {});

struct EvalResult {
  ConfusionMatrix confusion;
  ClassMetrics per_class;
  MacroMetrics macro;
};

/// Episodic evaluation, chaos off by construction. Episode-local
/// predictions are accumulated into one confusion matrix over the
/// dataset's global classes. Same seed, same result.
EvalResult evaluate(const ProjectionHead& head, const Dataset& test,
                    const EpisodeSpec& spec, int episodes, std::uint64_t seed);

struct SweepRow {
  double lambda = 0.0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

struct SweepFailure {
  int arm = 0;
  double lambda = 0.0;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // successful arms, in request order
  std::vector<SweepFailure> failures;
};

/// One independent train_run + test evaluation per lambda. Arm i trains
/// with seed derive_seed(base.seed, kSweepArmBase + i); every arm scores
/// the same test-episode stream (seed derive_seed(base.seed, kSweepEval))
/// so rows are comparable. Arms are independent and may run on up to
/// `jobs` threads; results merge in request order either way.
SweepResult sweep(const TrainConfig& base, const std::vector<double>& lambdas,
                  const Dataset& train, const Dataset& val, const Dataset& test,
                  int jobs = 1);

}  // namespace protochaos
