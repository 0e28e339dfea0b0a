#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protochaos/errors.hpp"

namespace protochaos {

/// Prediction counts: rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  Eigen::MatrixXi counts;
  std::vector<std::string> class_names;

  static ConfusionMatrix zero(std::vector<std::string> names);

  int n() const { return static_cast<int>(counts.rows()); }
  long total() const { return counts.cast<long>().sum(); }
};

void accumulate(ConfusionMatrix& cm, int true_idx, int pred_idx);

/// Per-class precision, recall, F1 and support, aligned with the matrix's
/// class_names. 0/0 is defined as 0 throughout.
struct ClassMetrics {
  Eigen::VectorXd precision;
  Eigen::VectorXd recall;
  Eigen::VectorXd f1;
  Eigen::VectorXi support;  // true count per class (row sums)
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);

struct MacroMetrics {
  double accuracy = 0.0;         // trace / total
  double macro_precision = 0.0;  // unweighted means over classes
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

MacroMetrics macro_metrics(const ConfusionMatrix& cm);

/// Quantitative cluster-shape statistics over labeled embeddings:
/// per-class mean squared distance to the class centroid, the smallest
/// centroid-to-centroid distance, and their ratio against the largest
/// RMS radius (+infinity when every class is a single point).
struct ClusterGeometry {
  Eigen::VectorXd intra_class_variance;
  double min_intercentroid_distance = 0.0;
  double separation_ratio = 0.0;
};

/// embeddings holds one vector per column; labels[i] classifies column i
/// and must cover every class in [0, num_classes).
ClusterGeometry cluster_geometry(const Eigen::MatrixXd& embeddings,
                                 const std::vector<int>& labels, int num_classes);

}  // namespace protochaos
