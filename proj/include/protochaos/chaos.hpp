#pragma once

#include <Eigen/Dense>

#include "protochaos/errors.hpp"
#include "protochaos/rng.hpp"

namespace protochaos {

/// Logistic-map noise source settings.
///
/// r is the map parameter (must stay in (0, 4] so the unit interval is
/// closed under iteration); warmup_steps burn in freshly seeded states;
/// lambda scales the emitted noise; enabled is the train-only switch --
/// evaluation paths never construct a noise source at all.
struct ChaosConfig {
  double r = 3.99;
  int warmup_steps = 8;
  double lambda = 0.15;
  bool enabled = true;

  void validate() const;
};

/// One logistic-map state variable per embedding coordinate. Every entry
/// stays strictly inside (0, 1) for the life of the stream.
struct ChaosState {
  Eigen::VectorXd states;
  double r = 3.99;

  Eigen::Index dim() const { return states.size(); }
};

/// Draw initial states uniformly, clamp them to [1e-3, 1 - 1e-3] to dodge
/// the fixed point at 0 and the boundary, then advance warmup_steps map
/// iterations. Fully determined by the rng seed.
ChaosState seed_chaos(Eigen::Index dim, Rng& rng, const ChaosConfig& config);

/// One logistic-map iteration x <- r * x * (1 - x), applied coordinatewise.
ChaosState step(const ChaosState& state, double r);

/// Advance the state one step and emit lambda * (2 x - 1) per coordinate.
/// Every coordinate of the result has magnitude at most lambda; lambda == 0
/// yields an exactly-zero vector.
Eigen::VectorXd sample_noise(ChaosState& state, double lambda);

/// Elementwise sum; the perturbed copy generally has non-unit norm, which
/// the downstream similarity absorbs by dividing by norms.
template <typename DerivedA, typename DerivedB>
Eigen::VectorXd perturb(const Eigen::MatrixBase<DerivedA>& z,
                        const Eigen::MatrixBase<DerivedB>& noise) {
  if (z.size() != noise.size()) {
    throw ValidationError("perturb: embedding has " + std::to_string(z.size()) +
                          " coordinates but noise has " + std::to_string(noise.size()));
  }
  return z + noise;
}

}  // namespace protochaos
