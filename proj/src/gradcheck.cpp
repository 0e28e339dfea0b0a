#include "protochaos/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace protochaos {

namespace {

double loss_at(const ProjectionHead& head, const Episode& episode,
               const ChaosConfig* chaos, const ChaosState* state) {
  if (chaos != nullptr && chaos->enabled) {
    ChaosState fresh = *state;  // identical noise for every evaluation
    return forward_episode(head, episode, *chaos, fresh).loss;
  }
  return forward_episode(head, episode).loss;
}

enum class ParamBlock { Weight, Bias, LogTau };

double central_difference(const ProjectionHead& head, const Episode& episode,
                          const ChaosConfig* chaos, const ChaosState* state,
                          ParamBlock block, Eigen::Index index, double h) {
  ProjectionHead probe = head;
  double* target = nullptr;
  switch (block) {
    case ParamBlock::Weight: target = probe.weight.data() + index; break;
    case ParamBlock::Bias: target = probe.bias.data() + index; break;
    case ParamBlock::LogTau: target = &probe.log_tau; break;
  }
  const double saved = *target;
  *target = saved + h;
  const double up = loss_at(probe, episode, chaos, state);
  *target = saved - h;
  const double down = loss_at(probe, episode, chaos, state);
  return (up - down) / (2.0 * h);
}

double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

void track(GradcheckBlock& block, double err, int fixture, double lambda,
           const std::string& coord) {
  if (err > block.worst_rel_error) {
    block.worst_rel_error = err;
    block.fixture = fixture;
    block.lambda = lambda;
    block.coordinate = coord;
  }
}

}  // namespace

Gradients finite_difference_gradients(const ProjectionHead& head, const Episode& episode,
                                      const ChaosConfig* chaos, const ChaosState* state,
                                      double fd_step) {
  Gradients g = Gradients::zero(head);
  for (Eigen::Index i = 0; i < head.weight.size(); ++i) {
    g.d_weight(i) =
        central_difference(head, episode, chaos, state, ParamBlock::Weight, i, fd_step);
  }
  for (Eigen::Index i = 0; i < head.bias.size(); ++i) {
    g.d_bias(i) =
        central_difference(head, episode, chaos, state, ParamBlock::Bias, i, fd_step);
  }
  g.d_log_tau =
      central_difference(head, episode, chaos, state, ParamBlock::LogTau, 0, fd_step);
  return g;
}

Episode synthetic_episode(int n_way, int k_shot, int q_count, Eigen::Index dim, Rng& rng) {
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_count = q_count;
  ep.support_features.resize(dim, static_cast<Eigen::Index>(n_way) * k_shot);
  ep.query_features.resize(dim, static_cast<Eigen::Index>(n_way) * q_count);
  char buf[32];
  for (int c = 0; c < n_way; ++c) {
    ep.class_names.push_back("class" + std::to_string(c));
    for (int i = 0; i < k_shot; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(c) * k_shot + i;
      for (Eigen::Index d = 0; d < dim; ++d) ep.support_features(d, col) = rng.gaussian();
      ep.support_class.push_back(c);
      std::snprintf(buf, sizeof(buf), "s%02d_%03d", c, i);
      ep.support_ids.push_back(buf);
    }
    for (int i = 0; i < q_count; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(c) * q_count + i;
      for (Eigen::Index d = 0; d < dim; ++d) ep.query_features(d, col) = rng.gaussian();
      ep.query_class.push_back(c);
      std::snprintf(buf, sizeof(buf), "q%02d_%03d", c, i);
      ep.query_ids.push_back(buf);
    }
  }
  return ep;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  report.tolerance = options.tolerance;

  for (int fixture = 0; fixture < options.fixtures; ++fixture) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(fixture)));
    const Episode episode = synthetic_episode(options.n_way, options.k_shot,
                                              options.q_count, options.feature_dim, rng);
    const ProjectionHead head =
        ProjectionHead::init(options.proj_dim, options.feature_dim, rng);

    for (const double lambda : options.lambdas) {
      ChaosConfig chaos;
      chaos.lambda = lambda;
      chaos.enabled = true;
      ChaosState state = seed_chaos(options.proj_dim, rng, chaos);

      ChaosState forward_state = state;
      const EpisodeForward fwd = forward_episode(head, episode, chaos, forward_state);
      Gradients analytic = backward_episode(fwd, head, episode);
      if (options.corrupt && fixture == 0) {
        analytic.d_weight(0, 0) += 1e-3;  // negative control
      }
      const Gradients numeric =
          finite_difference_gradients(head, episode, &chaos, &state, options.fd_step);

      char coord[48];
      for (Eigen::Index r = 0; r < analytic.d_weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < analytic.d_weight.cols(); ++c) {
          const double err = rel_error(analytic.d_weight(r, c), numeric.d_weight(r, c));
          std::snprintf(coord, sizeof(coord), "weight(%ld,%ld)", static_cast<long>(r),
                        static_cast<long>(c));
          track(report.weight, err, fixture, lambda, coord);
        }
      }
      for (Eigen::Index i = 0; i < analytic.d_bias.size(); ++i) {
        const double err = rel_error(analytic.d_bias[i], numeric.d_bias[i]);
        std::snprintf(coord, sizeof(coord), "bias(%ld)", static_cast<long>(i));
        track(report.bias, err, fixture, lambda, coord);
      }
      track(report.log_tau, rel_error(analytic.d_log_tau, numeric.d_log_tau), fixture,
            lambda, "log_tau");
    }
  }

  report.worst_rel_error = std::max(
      {report.weight.worst_rel_error, report.bias.worst_rel_error,
       report.log_tau.worst_rel_error});
  report.pass = report.worst_rel_error < report.tolerance;
  return report;
}

std::string GradcheckReport::summary() const {
  std::ostringstream out;
  const auto line = [&](const char* name, const GradcheckBlock& block) {
    out << name << ": worst rel error " << block.worst_rel_error;
    if (block.fixture >= 0) {
      out << " at fixture " << block.fixture << ", lambda " << block.lambda << ", "
          << block.coordinate;
    }
    out << '\n';
  };
  line("weight ", weight);
  line("bias   ", bias);
  line("log_tau", log_tau);
  out << (pass ? "PASS" : "FAIL") << ": max relative error " << worst_rel_error
      << (pass ? " < " : " >= ") << tolerance << '\n';
  return out.str();
}

}  // namespace protochaos
