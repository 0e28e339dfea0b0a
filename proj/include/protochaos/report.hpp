#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "protochaos/metrics.hpp"
#include "protochaos/trainer.hpp"

namespace protochaos {

/// Writes to "<path>.tmp" and renames on success, so a failed run never
/// leaves a truncated artifact behind.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

std::string format_fixed6(double v);

/// `episode,train_loss,eval_accuracy,eval_macro_precision,eval_macro_recall,eval_macro_f1`
std::string render_history_csv(const std::vector<HistoryRow>& history);

/// `lambda,accuracy,macro_precision,macro_recall,macro_f1`, 6-decimal fixed
/// point, one row per successful arm in request order.
std::string render_sweep_csv(const SweepResult& result);

/// Counts with a class-name header row and column.
std::string render_confusion_csv(const ConfusionMatrix& cm);

/// Key-value block: accuracy and macro metrics, then a per-class table with
/// columns `class,precision,recall,f1,support`, then cluster-geometry lines
/// when provided.
std::string render_metrics_report(const EvalResult& result,
                                  const std::optional<ClusterGeometry>& geometry = {});

/// `key = value` lines, in the order given.
std::string render_manifest(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace protochaos
