#include "protochaos/report.hpp"

#include <cstdio>
#include <fstream>

#include "protochaos/errors.hpp"

namespace protochaos {

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write: " + tmp.string());
    out << text;
    if (!out) throw IoError("failed writing: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                  ec.message());
  }
}

std::string format_fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string render_history_csv(const std::vector<HistoryRow>& history) {
  std::string out =
      "episode,train_loss,eval_accuracy,eval_macro_precision,eval_macro_recall,eval_macro_f1\n";
  for (const HistoryRow& row : history) {
    out += std::to_string(row.episode);
    out += ',' + format_fixed6(row.train_loss);
    out += ',' + format_fixed6(row.accuracy);
    out += ',' + format_fixed6(row.macro_precision);
    out += ',' + format_fixed6(row.macro_recall);
    out += ',' + format_fixed6(row.macro_f1);
    out += '\n';
  }
  return out;
}

std::string render_sweep_csv(const SweepResult& result) {
  std::string out = "lambda,accuracy,macro_precision,macro_recall,macro_f1\n";
  for (const SweepRow& row : result.rows) {
    out += format_fixed6(row.lambda);
    out += ',' + format_fixed6(row.accuracy);
    out += ',' + format_fixed6(row.macro_precision);
    out += ',' + format_fixed6(row.macro_recall);
    out += ',' + format_fixed6(row.macro_f1);
    out += '\n';
  }
  return out;
}

std::string render_confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "class";
  for (const std::string& name : cm.class_names) out += ',' + name;
  out += '\n';
  for (int r = 0; r < cm.n(); ++r) {
    out += cm.class_names[static_cast<std::size_t>(r)];
    for (int c = 0; c < cm.n(); ++c) {
      out += ',' + std::to_string(cm.counts(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string render_metrics_report(const EvalResult& result,
                                  const std::optional<ClusterGeometry>& geometry) {
  const std::vector<std::string>& names = result.confusion.class_names;
  std::string out;
  out += "accuracy = " + format_fixed6(result.macro.accuracy) + '\n';
  out += "macro_precision = " + format_fixed6(result.macro.macro_precision) + '\n';
  out += "macro_recall = " + format_fixed6(result.macro.macro_recall) + '\n';
  out += "macro_f1 = " + format_fixed6(result.macro.macro_f1) + '\n';
  out += "class,precision,recall,f1,support\n";
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Eigen::Index i = static_cast<Eigen::Index>(c);
    out += names[c];
    out += ',' + format_fixed6(result.per_class.precision[i]);
    out += ',' + format_fixed6(result.per_class.recall[i]);
    out += ',' + format_fixed6(result.per_class.f1[i]);
    out += ',' + std::to_string(result.per_class.support[i]);
    out += '\n';
  }
  if (geometry.has_value()) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      out += "cluster.intra_variance." + names[c] + " = " +
             format_fixed6(geometry->intra_class_variance[static_cast<Eigen::Index>(c)]) +
             '\n';
    }
    out += "cluster.min_intercentroid_distance = " +
           format_fixed6(geometry->min_intercentroid_distance) + '\n';
    out += "cluster.separation_ratio = " + format_fixed6(geometry->separation_ratio) + '\n';
  }
  return out;
}

std::string render_manifest(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key + " = " + value + '\n';
  }
  return out;
}

}  // namespace protochaos
