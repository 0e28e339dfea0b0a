#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protochaos/chaos.hpp"
#include "protochaos/episodes.hpp"
#include "protochaos/errors.hpp"
#include "protochaos/rng.hpp"

namespace protochaos {

/// Trainable head: linear projection, optional bias, and a learnable
/// temperature stored as log_tau so tau = exp(log_tau) stays positive.
struct ProjectionHead {
  Eigen::MatrixXd weight;  // out_dim x in_dim
  Eigen::VectorXd bias;    // empty when the head has no bias term
  double log_tau = std::log(20.0);
  double epsilon = 1e-12;

  Eigen::Index out_dim() const { return weight.rows(); }
  Eigen::Index in_dim() const { return weight.cols(); }
  bool has_bias() const { return bias.size() > 0; }
  double tau() const { return std::exp(log_tau); }

  /// Gaussian weight entries with standard deviation 1/sqrt(in_dim), zero
  /// bias, tau initialized to 20.
  static ProjectionHead init(Eigen::Index proj_dim, Eigen::Index in_dim, Rng& rng,
                             bool with_bias = true);
};

/// v / (||v|| + epsilon). Nonzero inputs come out within 1e-9 of unit norm;
/// the zero vector maps to the zero vector.
template <typename Derived>
Eigen::VectorXd l2_normalize(const Eigen::MatrixBase<Derived>& v, double epsilon = 1e-12) {
  return v / (v.norm() + epsilon);
}

/// l2_normalize(weight * features + bias).
Eigen::VectorXd project(const ProjectionHead& head, const Eigen::VectorXd& features);

/// Per-class arithmetic mean of the (perturbed) support embeddings, one
/// prototype per column. No re-normalization is applied; columns of
/// support_zhat must be grouped k_shot per class.
Eigen::MatrixXd compute_prototypes(const Eigen::MatrixXd& support_zhat,
                                   const std::vector<int>& support_class, int n_way,
                                   int k_shot);

/// tau * (zq . p) / ((||zq|| + eps) * (||p|| + eps)). The norm division is
/// kept even for already-normalized queries because perturbed prototypes
/// are not unit norm.
template <typename DerivedA, typename DerivedB>
double scaled_cosine(const Eigen::MatrixBase<DerivedA>& zq,
                     const Eigen::MatrixBase<DerivedB>& p, double tau,
                     double epsilon = 1e-12) {
  return tau * zq.dot(p) / ((zq.norm() + epsilon) * (p.norm() + epsilon));
}

/// Forward-pass caches for one episode, sufficient for the backward pass.
///
/// Support and query columns are held in canonical order -- sorted by
/// (local class, record id) -- so prototype sums, the loss, and gradients
/// are independent of the order records arrived in, at the bit level.
struct EpisodeForward {
  int n_way = 0;
  int k_shot = 0;

  std::vector<int> support_order;  // canonical column -> episode index
  std::vector<int> query_order;
  std::vector<int> support_class;  // per canonical column
  std::vector<int> query_class;

  Eigen::MatrixXd support_x;  // raw features, canonical columns
  Eigen::MatrixXd query_x;
  Eigen::MatrixXd support_pre;  // weight * x + bias
  Eigen::MatrixXd query_pre;
  Eigen::VectorXd support_prenorm;  // ||pre|| per column
  Eigen::VectorXd query_prenorm;
  Eigen::MatrixXd support_z;     // normalized
  Eigen::MatrixXd support_zhat;  // perturbed (== support_z when chaos is off)
  Eigen::MatrixXd query_z;
  Eigen::VectorXd query_znorm;  // ||z|| per query column
  Eigen::MatrixXd prototypes;   // out_dim x n_way
  Eigen::VectorXd proto_norm;

  Eigen::MatrixXd cosines;  // queries x classes
  Eigen::MatrixXd logits;   // tau * cosines
  Eigen::MatrixXd probs;    // stable row softmax of logits

  double loss = 0.0;
};

struct Gradients {
  Eigen::MatrixXd d_weight;
  Eigen::VectorXd d_bias;  // empty when the head has no bias term
  double d_log_tau = 0.0;

  static Gradients zero(const ProjectionHead& head);
  void accumulate(const Gradients& other);
  void scale(double factor);
  bool all_finite() const;
};

/// Evaluation path: queries and supports projected and normalized, no
/// perturbation anywhere. There is deliberately no way to pass a chaos
/// intensity here.
EpisodeForward forward_episode(const ProjectionHead& head, const Episode& episode);

/// Training path: support embeddings are perturbed with one fresh noise
/// draw each (advancing `state`) when config.enabled; queries are never
/// perturbed. With config.enabled == false, or lambda == 0, the result is
/// bit-identical to the evaluation path.
EpisodeForward forward_episode(const ProjectionHead& head, const Episode& episode,
                               const ChaosConfig& config, ChaosState& state);

/// Exact analytic gradient of the episode loss. Flows through both the
/// query branch and the support branch via prototypes; the noise is an
/// additive constant, so its Jacobian is the identity. Throws when the
/// cached forward does not match the head and episode handed in.
Gradients backward_episode(const EpisodeForward& forward, const ProjectionHead& head,
                           const Episode& episode);

/// Argmax per query row; ties break toward the lowest class index.
std::vector<int> predict(const EpisodeForward& forward);

}  // namespace protochaos
