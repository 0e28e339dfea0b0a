#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protochaos/data.hpp"
#include "protochaos/rng.hpp"

namespace protochaos {

struct EpisodeSpec {
  int n_way = 4;
  int k_shot = 5;
  int q_count = 15;

  void validate() const;
};

/// One self-contained N-way K-shot task. The local class index of a record
/// is its label's position in class_names; support and query are disjoint
/// by record id, with exactly k_shot support and q_count query records per
/// local class. Embeddings are stored one per column.
struct Episode {
  std::vector<std::string> class_names;

  Eigen::MatrixXd support_features;  // dim x (n_way * k_shot)
  std::vector<int> support_class;
  std::vector<std::string> support_ids;

  Eigen::MatrixXd query_features;  // dim x (n_way * q_count)
  std::vector<int> query_class;
  std::vector<std::string> query_ids;

  int n_way = 0;
  int k_shot = 0;
  int q_count = 0;
};

/// Draw n_way classes without replacement, then per class k_shot + q_count
/// records without replacement, support first. Deterministic given the rng
/// state; concurrent samplers must each own a stream derived via
/// derive_seed(master, stream_index).
Episode sample_episode(const Dataset& dataset, const EpisodeSpec& spec, Rng& rng);

}  // namespace protochaos
