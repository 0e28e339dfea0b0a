#include "protochaos/episodes.hpp"

#include <string>

#include "protochaos/errors.hpp"

namespace protochaos {

void EpisodeSpec::validate() const {
  if (n_way < 2) throw ValidationError("episode.n_way must be >= 2");
  if (k_shot < 1) throw ValidationError("episode.k_shot must be >= 1");
  if (q_count < 1) throw ValidationError("episode.q_count must be >= 1");
}

Episode sample_episode(const Dataset& dataset, const EpisodeSpec& spec, Rng& rng) {
  spec.validate();
  if (dataset.class_count() < spec.n_way) {
    throw ValidationError("episode spec asks for " + std::to_string(spec.n_way) +
                          " classes but the dataset has " +
                          std::to_string(dataset.class_count()));
  }

  Episode ep;
  ep.n_way = spec.n_way;
  ep.k_shot = spec.k_shot;
  ep.q_count = spec.q_count;

  const std::vector<int> classes =
      rng.sample_without_replacement(dataset.class_count(), spec.n_way);

  const int per_class = spec.k_shot + spec.q_count;
  const Eigen::Index dim = dataset.dim();
  ep.support_features.resize(dim, static_cast<Eigen::Index>(spec.n_way) * spec.k_shot);
  ep.query_features.resize(dim, static_cast<Eigen::Index>(spec.n_way) * spec.q_count);
  ep.support_class.reserve(ep.support_features.cols());
  ep.query_class.reserve(ep.query_features.cols());

  Eigen::Index s_col = 0;
  Eigen::Index q_col = 0;
  for (int local = 0; local < spec.n_way; ++local) {
    const int c = classes[static_cast<std::size_t>(local)];
    const std::string& name = dataset.class_names()[static_cast<std::size_t>(c)];
    const std::vector<int>& members = dataset.class_records(c);
    if (static_cast<int>(members.size()) < per_class) {
      throw ValidationError("class '" + name + "' has " +
                            std::to_string(members.size()) + " records but an episode needs " +
                            std::to_string(per_class));
    }
    ep.class_names.push_back(name);
    const std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(members.size()), per_class);
    for (int i = 0; i < per_class; ++i) {
      const EmbeddingRecord& rec =
          dataset.record(static_cast<std::size_t>(members[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)])]));
      if (i < spec.k_shot) {
        ep.support_features.col(s_col++) = rec.features;
        ep.support_class.push_back(local);
        ep.support_ids.push_back(rec.id);
      } else {
        ep.query_features.col(q_col++) = rec.features;
        ep.query_class.push_back(local);
        ep.query_ids.push_back(rec.id);
      }
    }
  }
  return ep;
}

}  // namespace protochaos
