#include "protochaos/chaos.hpp"

#include <algorithm>

namespace protochaos {

void ChaosConfig::validate() const {
  if (!(r > 0.0) || !(r <= 4.0)) {
    throw ValidationError("chaos.r must be in (0, 4], got " + std::to_string(r));
  }
  if (warmup_steps < 0) {
    throw ValidationError("chaos.warmup must be >= 0, got " + std::to_string(warmup_steps));
  }
  if (!(lambda >= 0.0)) {
    throw ValidationError("chaos.lambda must be >= 0, got " + std::to_string(lambda));
  }
}

ChaosState seed_chaos(Eigen::Index dim, Rng& rng, const ChaosConfig& config) {
  config.validate();
  if (dim < 1) {
    throw ValidationError("chaos state needs at least one coordinate");
  }
  ChaosState state;
  state.r = config.r;
  state.states.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    state.states[i] = std::clamp(rng.uniform(), 1e-3, 1.0 - 1e-3);
  }
  for (int w = 0; w < config.warmup_steps; ++w) {
    state = step(state, config.r);
  }
  return state;
}

ChaosState step(const ChaosState& state, double r) {
  ChaosState out;
  out.r = r;
  out.states = r * state.states.array() * (1.0 - state.states.array());
  return out;
}

Eigen::VectorXd sample_noise(ChaosState& state, double lambda) {
  if (!(lambda >= 0.0)) {
    throw ValidationError("chaos intensity must be >= 0, got " + std::to_string(lambda));
  }
  state = step(state, state.r);
  if (lambda == 0.0) {
    return Eigen::VectorXd::Zero(state.dim());
  }
  return lambda * (2.0 * state.states.array() - 1.0);
}

}  // namespace protochaos
