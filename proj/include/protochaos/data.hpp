#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protochaos/errors.hpp"

namespace protochaos {

/// One labeled feature vector, the unit the whole pipeline consumes.
struct EmbeddingRecord {
  std::string id;
  std::string label;
  Eigen::VectorXd features;
};

/// Immutable labeled embedding collection.
///
/// Invariants, enforced at construction: all features finite, one shared
/// dimensionality, at least one class, unique record ids. Class names keep
/// first-appearance order. Safe for concurrent read-only access.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_records(std::vector<EmbeddingRecord> records);

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  int class_count() const { return static_cast<int>(class_names_.size()); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<EmbeddingRecord>& records() const { return records_; }
  const EmbeddingRecord& record(std::size_t i) const { return records_[i]; }

  /// Positions of one class's records, in insertion order.
  const std::vector<int>& class_records(int class_idx) const;

  /// Index of a label in class_names, or -1 when absent.
  int class_index(const std::string& label) const;

 private:
  std::vector<EmbeddingRecord> records_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<int>> by_class_;
  Eigen::Index dim_ = 0;
};

/// Axis-aligned Gaussian cluster generator: class c's centroid sits at
/// separation * sigma along coordinate axis c (so dim >= num_classes), and
/// an outlier_fraction of each class is drawn at outlier_scale * sigma.
struct SyntheticSpec {
  int num_classes = 4;
  int per_class = 200;
  Eigen::Index dim = 32;
  double separation = 6.0;
  double sigma = 1.0;
  double outlier_fraction = 0.0;
  double outlier_scale = 3.0;

  void validate() const;
};

/// CSV schema: header `id,label,f0,...,f{D-1}`, one record per line,
/// features parsed as 64-bit floats. Errors carry the offending line number.
Dataset load_embeddings(const std::filesystem::path& path);

/// Canonical CSV serialization (17-significant-digit features). Identical
/// datasets serialize to identical bytes.
std::string to_csv(const Dataset& dataset);

void save_embeddings(const Dataset& dataset, const std::filesystem::path& path);

/// FNV-1a over the canonical serialization, as "0x"-prefixed hex.
std::string dataset_digest(const Dataset& dataset);

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct DataSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Per-class stratified, disjoint, exhaustive partition. Counts follow
/// largest-remainder rounding (remainder ties broken in train, val, test
/// order); deterministic given the seed. A class that would vanish from any
/// part is a stratification error.
DataSplit split(const Dataset& dataset, const std::array<double, 3>& fractions,
                std::uint64_t seed);

}  // namespace protochaos
