#include "protochaos/metrics.hpp"

#include <cmath>
#include <limits>

namespace protochaos {

ConfusionMatrix ConfusionMatrix::zero(std::vector<std::string> names) {
  if (names.empty()) {
    throw ValidationError("confusion matrix needs at least one class");
  }
  ConfusionMatrix cm;
  const int n = static_cast<int>(names.size());
  cm.counts = Eigen::MatrixXi::Zero(n, n);
  cm.class_names = std::move(names);
  return cm;
}

void accumulate(ConfusionMatrix& cm, int true_idx, int pred_idx) {
  if (true_idx < 0 || true_idx >= cm.n() || pred_idx < 0 || pred_idx >= cm.n()) {
    throw ValidationError("confusion matrix index out of range: (" +
                          std::to_string(true_idx) + ", " + std::to_string(pred_idx) +
                          ") in " + std::to_string(cm.n()) + " classes");
  }
  ++cm.counts(true_idx, pred_idx);
}

namespace {
double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ValidationError("confusion matrix is empty");
  const int n = cm.n();
  ClassMetrics m;
  m.precision.resize(n);
  m.recall.resize(n);
  m.f1.resize(n);
  m.support.resize(n);
  for (int c = 0; c < n; ++c) {
    const double tp = cm.counts(c, c);
    const double col = cm.counts.col(c).cast<double>().sum();
    const double row = cm.counts.row(c).cast<double>().sum();
    m.precision[c] = safe_ratio(tp, col);
    m.recall[c] = safe_ratio(tp, row);
    m.f1[c] = safe_ratio(2.0 * m.precision[c] * m.recall[c], m.precision[c] + m.recall[c]);
    m.support[c] = static_cast<int>(row);
  }
  return m;
}

MacroMetrics macro_metrics(const ConfusionMatrix& cm) {
  const ClassMetrics per_class = class_metrics(cm);
  const double total = static_cast<double>(cm.total());
  MacroMetrics out;
  out.accuracy = safe_ratio(cm.counts.cast<double>().trace(), total);
  out.macro_precision = per_class.precision.mean();
  out.macro_recall = per_class.recall.mean();
  out.macro_f1 = per_class.f1.mean();
  return out;
}

ClusterGeometry cluster_geometry(const Eigen::MatrixXd& embeddings,
                                 const std::vector<int>& labels, int num_classes) {
  if (num_classes < 2) {
    throw ValidationError("cluster geometry needs at least two classes");
  }
  if (embeddings.cols() != static_cast<Eigen::Index>(labels.size())) {
    throw ValidationError("cluster geometry: labels do not match embedding columns");
  }

  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(embeddings.rows(), num_classes);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(num_classes);
  for (Eigen::Index i = 0; i < embeddings.cols(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= num_classes) {
      throw ValidationError("cluster geometry: label out of range");
    }
    centroids.col(c) += embeddings.col(i);
    ++counts[c];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw ValidationError("cluster geometry: class " + std::to_string(c) +
                            " has no vectors");
    }
    centroids.col(c) /= static_cast<double>(counts[c]);
  }

  ClusterGeometry geo;
  geo.intra_class_variance = Eigen::VectorXd::Zero(num_classes);
  for (Eigen::Index i = 0; i < embeddings.cols(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    geo.intra_class_variance[c] += (embeddings.col(i) - centroids.col(c)).squaredNorm();
  }
  for (int c = 0; c < num_classes; ++c) {
    geo.intra_class_variance[c] /= static_cast<double>(counts[c]);
  }

  geo.min_intercentroid_distance = std::numeric_limits<double>::infinity();
  for (int a = 0; a < num_classes; ++a) {
    for (int b = a + 1; b < num_classes; ++b) {
      geo.min_intercentroid_distance = std::min(
          geo.min_intercentroid_distance, (centroids.col(a) - centroids.col(b)).norm());
    }
  }

  const double max_rms = std::sqrt(geo.intra_class_variance.maxCoeff());
  geo.separation_ratio = max_rms == 0.0 ? std::numeric_limits<double>::infinity()
                                        : geo.min_intercentroid_distance / max_rms;
  return geo;
}

}  // namespace protochaos
