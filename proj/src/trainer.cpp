#include "protochaos/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "protochaos/version.hpp"

namespace protochaos {

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd-momentum";
}

void TrainConfig::validate() const {
  if (episodes < 0) throw ValidationError("train.episodes must be >= 0");
  if (meta_batch < 1) throw ValidationError("episode.meta_batch must be >= 1");
  if (eval_every < 1) throw ValidationError("train.eval_every must be >= 1");
  if (eval_episodes < 1) throw ValidationError("train.eval_episodes must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("train.lr must be > 0");
  if (!(momentum >= 0.0) || !(momentum < 1.0)) {
    throw ValidationError("train.momentum must be in [0, 1)");
  }
  if (!(beta1 >= 0.0) || !(beta1 < 1.0)) throw ValidationError("train.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0) || !(beta2 < 1.0)) throw ValidationError("train.beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("train.adam_eps must be > 0");
  if (proj_dim < 1) throw ValidationError("model.proj_dim must be >= 1");
  spec.validate();
  chaos.validate();
}

OptimizerState OptimizerState::zero(const ProjectionHead& head) {
  OptimizerState s;
  s.m_weight = Eigen::MatrixXd::Zero(head.out_dim(), head.in_dim());
  s.v_weight = Eigen::MatrixXd::Zero(head.out_dim(), head.in_dim());
  if (head.has_bias()) {
    s.m_bias = Eigen::VectorXd::Zero(head.out_dim());
    s.v_bias = Eigen::VectorXd::Zero(head.out_dim());
  }
  return s;
}

namespace {

void check_shapes(const OptimizerState& state, const ProjectionHead& head,
                  const Gradients& grads) {
  const bool ok = state.m_weight.rows() == head.out_dim() &&
                  state.m_weight.cols() == head.in_dim() &&
                  grads.d_weight.rows() == head.out_dim() &&
                  grads.d_weight.cols() == head.in_dim() &&
                  grads.d_bias.size() == head.bias.size() &&
                  state.m_bias.size() == head.bias.size();
  if (!ok) throw ValidationError("optimizer_step: shapes do not match the head");
}

void check_dataset(const Dataset& ds, const EpisodeSpec& spec, const char* which) {
  if (ds.class_count() < spec.n_way) {
    throw ValidationError(std::string(which) + " dataset has " +
                          std::to_string(ds.class_count()) + " classes but episodes need " +
                          std::to_string(spec.n_way));
  }
  const int per_class = spec.k_shot + spec.q_count;
  for (int c = 0; c < ds.class_count(); ++c) {
    if (static_cast<int>(ds.class_records(c).size()) < per_class) {
      throw ValidationError(std::string(which) + " dataset class '" +
                            ds.class_names()[static_cast<std::size_t>(c)] + "' has " +
                            std::to_string(ds.class_records(c).size()) +
                            " records but episodes need " + std::to_string(per_class));
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void optimizer_step(OptimizerState& state, ProjectionHead& head, const Gradients& grads,
                    const TrainConfig& config) {
  check_shapes(state, head, grads);
  const double lr = config.learning_rate;
  if (config.optimizer == OptimizerKind::Adam) {
    ++state.step_count;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    const double eps = config.adam_eps;

    state.m_weight = b1 * state.m_weight + (1.0 - b1) * grads.d_weight;
    state.v_weight =
        b2 * state.v_weight + (1.0 - b2) * grads.d_weight.cwiseProduct(grads.d_weight);
    head.weight.array() -= lr * (state.m_weight.array() / bc1) /
                           ((state.v_weight.array() / bc2).sqrt() + eps);
    if (head.has_bias()) {
      state.m_bias = b1 * state.m_bias + (1.0 - b1) * grads.d_bias;
      state.v_bias = b2 * state.v_bias + (1.0 - b2) * grads.d_bias.cwiseProduct(grads.d_bias);
      head.bias.array() -=
          lr * (state.m_bias.array() / bc1) / ((state.v_bias.array() / bc2).sqrt() + eps);
    }
    state.m_log_tau = b1 * state.m_log_tau + (1.0 - b1) * grads.d_log_tau;
    state.v_log_tau = b2 * state.v_log_tau + (1.0 - b2) * grads.d_log_tau * grads.d_log_tau;
    head.log_tau -=
        lr * (state.m_log_tau / bc1) / (std::sqrt(state.v_log_tau / bc2) + eps);
  } else {
    ++state.step_count;
    const double mu = config.momentum;
    state.m_weight = mu * state.m_weight + grads.d_weight;
    head.weight -= lr * state.m_weight;
    if (head.has_bias()) {
      state.m_bias = mu * state.m_bias + grads.d_bias;
      head.bias -= lr * state.m_bias;
    }
    state.m_log_tau = mu * state.m_log_tau + grads.d_log_tau;
    head.log_tau -= lr * state.m_log_tau;
  }
}

RunResult train_run(const TrainConfig& config, const Dataset& train, const Dataset& val,
                    const TrainHooks& hooks) {
  config.validate();
  check_dataset(train, config.spec, "train");
  check_dataset(val, config.spec, "val");
  const auto t0 = std::chrono::steady_clock::now();

  Rng init_rng(derive_seed(config.seed, streams::kHeadInit));
  ProjectionHead head =
      ProjectionHead::init(config.proj_dim, train.dim(), init_rng, config.bias);

  Rng episode_rng(derive_seed(config.seed, streams::kTrainEpisodes));
  ChaosState chaos_state;
  if (config.chaos.enabled) {
    Rng chaos_rng(derive_seed(config.seed, streams::kChaosSeed));
    chaos_state = seed_chaos(config.proj_dim, chaos_rng, config.chaos);
  }
  const std::uint64_t eval_seed = derive_seed(config.seed, streams::kValidation);

  OptimizerState opt = OptimizerState::zero(head);
  Gradients batch_grads = Gradients::zero(head);
  int batch_count = 0;
  double interval_loss = 0.0;
  int interval_count = 0;

  RunResult result;
  result.best_head = head;
  result.best_episode = 0;
  result.best_accuracy = -1.0;

  for (int e = 0; e < config.episodes; ++e) {
    const Episode episode = sample_episode(train, config.spec, episode_rng);
    const EpisodeForward fwd = forward_episode(head, episode, config.chaos, chaos_state);
    const Gradients grads = backward_episode(fwd, head, episode);
    batch_grads.accumulate(grads);
    ++batch_count;
    interval_loss += fwd.loss;
    ++interval_count;

    const bool last = e + 1 == config.episodes;
    if (batch_count == config.meta_batch || last) {
      batch_grads.scale(1.0 / static_cast<double>(batch_count));
      if (!batch_grads.all_finite()) {
        throw NumericError("non-finite gradient at episode " + std::to_string(e + 1) +
                           " (|d_weight| = " + format_double(batch_grads.d_weight.norm()) +
                           ", d_log_tau = " + format_double(batch_grads.d_log_tau) + ")");
      }
      optimizer_step(opt, head, batch_grads, config);
      if (hooks.on_step) hooks.on_step(e + 1, head);
      batch_grads = Gradients::zero(head);
      batch_count = 0;
    }

    if ((e + 1) % config.eval_every == 0 || last) {
      const EvalResult ev = evaluate(head, val, config.spec, config.eval_episodes, eval_seed);
      HistoryRow row;
      row.episode = e + 1;
      row.train_loss = interval_loss / static_cast<double>(interval_count);
      row.accuracy = ev.macro.accuracy;
      row.macro_precision = ev.macro.macro_precision;
      row.macro_recall = ev.macro.macro_recall;
      row.macro_f1 = ev.macro.macro_f1;
      result.history.push_back(row);
      if (hooks.on_eval) hooks.on_eval(row);
      if (ev.macro.accuracy > result.best_accuracy) {
        result.best_accuracy = ev.macro.accuracy;
        result.best_head = head;
        result.best_episode = e + 1;
      }
      interval_loss = 0.0;
      interval_count = 0;
    }
  }

  result.head = std::move(head);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  result.manifest = {
      {"version", kVersion},
      {"train.seed", std::to_string(config.seed)},
      {"train.episodes", std::to_string(config.episodes)},
      {"episode.meta_batch", std::to_string(config.meta_batch)},
      {"train.eval_every", std::to_string(config.eval_every)},
      {"train.eval_episodes", std::to_string(config.eval_episodes)},
      {"train.optimizer", optimizer_name(config.optimizer)},
      {"train.lr", format_double(config.learning_rate)},
      {"train.momentum", format_double(config.momentum)},
      {"train.beta1", format_double(config.beta1)},
      {"train.beta2", format_double(config.beta2)},
      {"train.adam_eps", format_double(config.adam_eps)},
      {"episode.n_way", std::to_string(config.spec.n_way)},
      {"episode.k_shot", std::to_string(config.spec.k_shot)},
      {"episode.q_count", std::to_string(config.spec.q_count)},
      {"chaos.enabled", config.chaos.enabled ? "true" : "false"},
      {"chaos.lambda", format_double(config.chaos.lambda)},
      {"chaos.r", format_double(config.chaos.r)},
      {"chaos.warmup", std::to_string(config.chaos.warmup_steps)},
      {"model.proj_dim", std::to_string(config.proj_dim)},
      {"model.bias", config.bias ? "true" : "false"},
      {"data.train_digest", dataset_digest(train)},
      {"data.val_digest", dataset_digest(val)},
  };
  return result;
}

EvalResult evaluate(const ProjectionHead& head, const Dataset& test,
                    const EpisodeSpec& spec, int episodes, std::uint64_t seed) {
  spec.validate();
  check_dataset(test, spec, "eval");
  if (episodes < 1) throw ValidationError("evaluation needs at least one episode");

  Rng rng(seed);
  ConfusionMatrix cm = ConfusionMatrix::zero(test.class_names());
  for (int e = 0; e < episodes; ++e) {
    const Episode episode = sample_episode(test, spec, rng);
    const EpisodeForward fwd = forward_episode(head, episode);
    const std::vector<int> preds = predict(fwd);
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const int true_local = fwd.query_class[j];
      const int pred_local = preds[j];
      const int true_global =
          test.class_index(episode.class_names[static_cast<std::size_t>(true_local)]);
      const int pred_global =
          test.class_index(episode.class_names[static_cast<std::size_t>(pred_local)]);
      accumulate(cm, true_global, pred_global);
    }
  }
  EvalResult out;
  out.per_class = class_metrics(cm);
  out.macro = macro_metrics(cm);
  out.confusion = std::move(cm);
  return out;
}

SweepResult sweep(const TrainConfig& base, const std::vector<double>& lambdas,
                  const Dataset& train, const Dataset& val, const Dataset& test,
                  int jobs) {
  if (lambdas.empty()) throw ValidationError("sweep needs at least one lambda");
  for (const double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw ValidationError("sweep lambdas must be >= 0");
  }
  base.validate();
  const int n_arms = static_cast<int>(lambdas.size());
  jobs = std::max(1, std::min(jobs, n_arms));

  const std::uint64_t test_eval_seed = derive_seed(base.seed, streams::kSweepEval);
  std::vector<SweepRow> rows(static_cast<std::size_t>(n_arms));
  std::vector<std::string> errors(static_cast<std::size_t>(n_arms));
  // char, not bool: concurrent arms write disjoint slots
  std::vector<char> ok(static_cast<std::size_t>(n_arms), 0);

  const auto run_arm = [&](int arm) {
    TrainConfig config = base;
    config.chaos.enabled = true;
    config.chaos.lambda = lambdas[static_cast<std::size_t>(arm)];
    config.seed = derive_seed(base.seed, streams::kSweepArmBase +
                                             static_cast<std::uint64_t>(arm));
    const RunResult run = train_run(config, train, val);
    const EvalResult ev =
        evaluate(run.head, test, config.spec, config.eval_episodes, test_eval_seed);
    SweepRow row;
    row.lambda = config.chaos.lambda;
    row.accuracy = ev.macro.accuracy;
    row.macro_precision = ev.macro.macro_precision;
    row.macro_recall = ev.macro.macro_recall;
    row.macro_f1 = ev.macro.macro_f1;
    rows[static_cast<std::size_t>(arm)] = row;
    ok[static_cast<std::size_t>(arm)] = 1;
  };

  if (jobs == 1) {
    for (int arm = 0; arm < n_arms; ++arm) {
      try {
        run_arm(arm);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(arm)] = e.what();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const int arm = next.fetch_add(1);
          if (arm >= n_arms) return;
          try {
            run_arm(arm);
          } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(arm)] = e.what();
          }
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }

  SweepResult result;
  for (int arm = 0; arm < n_arms; ++arm) {
    if (ok[static_cast<std::size_t>(arm)]) {
      result.rows.push_back(rows[static_cast<std::size_t>(arm)]);
    } else {
      result.failures.push_back(SweepFailure{arm, lambdas[static_cast<std::size_t>(arm)],
                                             errors[static_cast<std::size_t>(arm)]});
    }
  }
  return result;
}

}  // namespace protochaos
