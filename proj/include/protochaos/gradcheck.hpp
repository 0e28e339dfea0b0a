#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "protochaos/chaos.hpp"
#include "protochaos/episodes.hpp"
#include "protochaos/model.hpp"

namespace protochaos {

/// Central finite differences of the episode loss, parameter by parameter.
/// Uses only the forward pass; the chaos state is copied before every loss
/// evaluation so each sees identical noise. This is the independent oracle
/// the analytic backward pass is checked against.
Gradients finite_difference_gradients(const ProjectionHead& head, const Episode& episode,
                                      const ChaosConfig* chaos, const ChaosState* state,
                                      double fd_step);

/// Standard-normal features arranged into a valid episode; ids are unique
/// and classes balanced. For gradient fixtures and tests.
Episode synthetic_episode(int n_way, int k_shot, int q_count, Eigen::Index dim, Rng& rng);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int fixtures = 20;
  int n_way = 4;
  int k_shot = 5;
  int q_count = 5;
  Eigen::Index feature_dim = 16;
  Eigen::Index proj_dim = 8;
  double fd_step = 1e-6;
  double tolerance = 1e-5;
  std::vector<double> lambdas = {0.0, 0.15};
  bool corrupt = false;  // negative control: biases one analytic entry
};

struct GradcheckBlock {
  double worst_rel_error = 0.0;
  int fixture = -1;
  double lambda = 0.0;
  std::string coordinate;
};

struct GradcheckReport {
  GradcheckBlock weight;
  GradcheckBlock bias;
  GradcheckBlock log_tau;
  double worst_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  std::string summary() const;
};

/// Runs every fixture at every lambda, comparing backward_episode against
/// finite_difference_gradients coordinate by coordinate with relative error
/// |a - n| / max(|a|, |n|, 1e-8).
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace protochaos
