#include "protochaos/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace protochaos {

namespace {

// Canonical column order: sort by (local class, record id) so downstream
// sums are independent of arrival order at the bit level.
std::vector<int> canonical_order(const std::vector<int>& cls,
                                 const std::vector<std::string>& ids) {
  std::vector<int> order(cls.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const std::size_t ua = static_cast<std::size_t>(a);
    const std::size_t ub = static_cast<std::size_t>(b);
    if (cls[ua] != cls[ub]) return cls[ua] < cls[ub];
    return ids[ua] < ids[ub];
  });
  return order;
}

void check_episode_shape(const ProjectionHead& head, const Episode& ep) {
  if (ep.n_way < 1 || ep.k_shot < 1 || ep.q_count < 1) {
    throw ValidationError("episode needs at least one class, support and query record");
  }
  if (ep.support_features.rows() != head.in_dim() ||
      ep.query_features.rows() != head.in_dim()) {
    throw ValidationError("episode features have dimension " +
                          std::to_string(ep.support_features.rows()) +
                          " but the head expects " + std::to_string(head.in_dim()));
  }
  if (ep.support_features.cols() !=
          static_cast<Eigen::Index>(ep.n_way) * ep.k_shot ||
      ep.query_features.cols() != static_cast<Eigen::Index>(ep.n_way) * ep.q_count) {
    throw ValidationError("episode support/query counts do not match its spec");
  }
}

// z = a / (||a|| + eps), column by column; records the pre-normalization norms.
void normalize_columns(const Eigen::MatrixXd& pre, double epsilon, Eigen::MatrixXd& z,
                       Eigen::VectorXd& prenorm) {
  z.resizeLike(pre);
  prenorm.resize(pre.cols());
  for (Eigen::Index i = 0; i < pre.cols(); ++i) {
    const double n = pre.col(i).norm();
    prenorm[i] = n;
    z.col(i) = pre.col(i) / (n + epsilon);
  }
}

// Backward through z = a / (||a|| + eps): given dL/dz, accumulate dL/da.
// At a == 0 the map is differentiable with Jacobian I/eps; the rank-one
// term vanishes there.
Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& pre,
                                   const Eigen::VectorXd& prenorm,
                                   const Eigen::MatrixXd& dz, double epsilon) {
  Eigen::MatrixXd da(pre.rows(), pre.cols());
  for (Eigen::Index i = 0; i < pre.cols(); ++i) {
    const double rho = prenorm[i];
    const double denom = rho + epsilon;
    da.col(i) = dz.col(i) / denom;
    if (rho > 0.0) {
      const double a_dot_dz = pre.col(i).dot(dz.col(i));
      da.col(i) -= pre.col(i) * (a_dot_dz / (rho * denom * denom));
    }
  }
  return da;
}

EpisodeForward forward_impl(const ProjectionHead& head, const Episode& ep,
                            const ChaosConfig* chaos, ChaosState* state) {
  check_episode_shape(head, ep);
  const Eigen::Index s_count = ep.support_features.cols();
  const Eigen::Index q_count = ep.query_features.cols();
  const double eps = head.epsilon;
  const double tau = head.tau();

  EpisodeForward f;
  f.n_way = ep.n_way;
  f.k_shot = ep.k_shot;
  f.support_order = canonical_order(ep.support_class, ep.support_ids);
  f.query_order = canonical_order(ep.query_class, ep.query_ids);

  f.support_x.resize(head.in_dim(), s_count);
  f.support_class.resize(static_cast<std::size_t>(s_count));
  for (Eigen::Index i = 0; i < s_count; ++i) {
    const int src = f.support_order[static_cast<std::size_t>(i)];
    f.support_x.col(i) = ep.support_features.col(src);
    f.support_class[static_cast<std::size_t>(i)] =
        ep.support_class[static_cast<std::size_t>(src)];
  }
  f.query_x.resize(head.in_dim(), q_count);
  f.query_class.resize(static_cast<std::size_t>(q_count));
  for (Eigen::Index j = 0; j < q_count; ++j) {
    const int src = f.query_order[static_cast<std::size_t>(j)];
    f.query_x.col(j) = ep.query_features.col(src);
    f.query_class[static_cast<std::size_t>(j)] =
        ep.query_class[static_cast<std::size_t>(src)];
  }

  f.support_pre.noalias() = head.weight * f.support_x;
  f.query_pre.noalias() = head.weight * f.query_x;
  if (head.has_bias()) {
    f.support_pre.colwise() += head.bias;
    f.query_pre.colwise() += head.bias;
  }
  normalize_columns(f.support_pre, eps, f.support_z, f.support_prenorm);
  normalize_columns(f.query_pre, eps, f.query_z, f.query_prenorm);

  const bool inject = chaos != nullptr && chaos->enabled;
  if (inject) {
    chaos->validate();
    if (state == nullptr || state->dim() != head.out_dim()) {
      throw ValidationError("chaos state dimension does not match the head output");
    }
    f.support_zhat.resizeLike(f.support_z);
    for (Eigen::Index i = 0; i < s_count; ++i) {
      const Eigen::VectorXd noise = sample_noise(*state, chaos->lambda);
      f.support_zhat.col(i) = perturb(f.support_z.col(i), noise);
    }
  } else {
    f.support_zhat = f.support_z;
  }

  f.prototypes = compute_prototypes(f.support_zhat, f.support_class, ep.n_way, ep.k_shot);
  f.proto_norm.resize(ep.n_way);
  for (int c = 0; c < ep.n_way; ++c) f.proto_norm[c] = f.prototypes.col(c).norm();
  f.query_znorm.resize(q_count);
  for (Eigen::Index j = 0; j < q_count; ++j) f.query_znorm[j] = f.query_z.col(j).norm();

  // cosines(j, c) = (zq_j . p_c) / ((||zq_j|| + eps) (||p_c|| + eps))
  f.cosines.noalias() = f.query_z.transpose() * f.prototypes;
  for (Eigen::Index j = 0; j < q_count; ++j) {
    f.cosines.row(j) /= (f.query_znorm[j] + eps);
  }
  for (int c = 0; c < ep.n_way; ++c) {
    f.cosines.col(c) /= (f.proto_norm[c] + eps);
  }
  f.logits = tau * f.cosines;

  // Stable row softmax and mean negative log-probability of the true class.
  f.probs.resizeLike(f.logits);
  double loss_sum = 0.0;
  for (Eigen::Index j = 0; j < q_count; ++j) {
    const double row_max = f.logits.row(j).maxCoeff();
    const Eigen::ArrayXd shifted = f.logits.row(j).transpose().array() - row_max;
    const Eigen::ArrayXd exps = shifted.exp();
    const double z = exps.sum();
    f.probs.row(j) = (exps / z).matrix().transpose();
    const int y = f.query_class[static_cast<std::size_t>(j)];
    loss_sum += std::log(z) + row_max - f.logits(j, y);
  }
  f.loss = loss_sum / static_cast<double>(q_count);
  return f;
}

}  // namespace

ProjectionHead ProjectionHead::init(Eigen::Index proj_dim, Eigen::Index in_dim, Rng& rng,
                                    bool with_bias) {
  if (proj_dim < 1 || in_dim < 1) {
    throw ValidationError("projection head dimensions must be >= 1");
  }
  ProjectionHead head;
  head.weight.resize(proj_dim, in_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (Eigen::Index r = 0; r < proj_dim; ++r) {
    for (Eigen::Index c = 0; c < in_dim; ++c) {
      head.weight(r, c) = scale * rng.gaussian();
    }
  }
  if (with_bias) {
    head.bias = Eigen::VectorXd::Zero(proj_dim);
  }
  return head;
}

Eigen::VectorXd project(const ProjectionHead& head, const Eigen::VectorXd& features) {
  if (features.size() != head.in_dim()) {
    throw ValidationError("project: feature vector has " + std::to_string(features.size()) +
                          " entries but the head expects " + std::to_string(head.in_dim()));
  }
  Eigen::VectorXd pre = head.weight * features;
  if (head.has_bias()) pre += head.bias;
  return l2_normalize(pre, head.epsilon);
}

Eigen::MatrixXd compute_prototypes(const Eigen::MatrixXd& support_zhat,
                                   const std::vector<int>& support_class, int n_way,
                                   int k_shot) {
  if (support_zhat.cols() != static_cast<Eigen::Index>(support_class.size())) {
    throw ValidationError("compute_prototypes: class tags do not match columns");
  }
  std::vector<int> counts(static_cast<std::size_t>(n_way), 0);
  Eigen::MatrixXd protos = Eigen::MatrixXd::Zero(support_zhat.rows(), n_way);
  for (Eigen::Index i = 0; i < support_zhat.cols(); ++i) {
    const int c = support_class[static_cast<std::size_t>(i)];
    if (c < 0 || c >= n_way) {
      throw ValidationError("compute_prototypes: class index out of range");
    }
    protos.col(c) += support_zhat.col(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < n_way; ++c) {
    if (counts[static_cast<std::size_t>(c)] != k_shot) {
      throw ValidationError("incomplete support: class " + std::to_string(c) + " has " +
                            std::to_string(counts[static_cast<std::size_t>(c)]) +
                            " embeddings, expected " + std::to_string(k_shot));
    }
  }
  protos /= static_cast<double>(k_shot);
  return protos;
}

Gradients Gradients::zero(const ProjectionHead& head) {
  Gradients g;
  g.d_weight = Eigen::MatrixXd::Zero(head.out_dim(), head.in_dim());
  if (head.has_bias()) g.d_bias = Eigen::VectorXd::Zero(head.out_dim());
  g.d_log_tau = 0.0;
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  d_weight += other.d_weight;
  if (d_bias.size() > 0) d_bias += other.d_bias;
  d_log_tau += other.d_log_tau;
}

void Gradients::scale(double factor) {
  d_weight *= factor;
  if (d_bias.size() > 0) d_bias *= factor;
  d_log_tau *= factor;
}

bool Gradients::all_finite() const {
  return d_weight.allFinite() && (d_bias.size() == 0 || d_bias.allFinite()) &&
         std::isfinite(d_log_tau);
}

EpisodeForward forward_episode(const ProjectionHead& head, const Episode& episode) {
  return forward_impl(head, episode, nullptr, nullptr);
}

EpisodeForward forward_episode(const ProjectionHead& head, const Episode& episode,
                               const ChaosConfig& config, ChaosState& state) {
  return forward_impl(head, episode, &config, &state);
}

Gradients backward_episode(const EpisodeForward& f, const ProjectionHead& head,
                           const Episode& episode) {
  const Eigen::Index s_count = f.support_x.cols();
  const Eigen::Index q_count = f.query_x.cols();
  if (f.n_way != episode.n_way || f.k_shot != episode.k_shot ||
      s_count != episode.support_features.cols() ||
      q_count != episode.query_features.cols() ||
      f.support_x.rows() != head.in_dim() || f.support_z.rows() != head.out_dim() ||
      f.probs.rows() != q_count || f.probs.cols() != f.n_way) {
    throw ValidationError("backward_episode: forward cache does not match head/episode");
  }
  const double eps = head.epsilon;
  const double tau = head.tau();
  const int n_way = f.n_way;

  // dL/dlogits: (softmax - onehot) / query count.
  Eigen::MatrixXd g_logits = f.probs;
  for (Eigen::Index j = 0; j < q_count; ++j) {
    g_logits(j, f.query_class[static_cast<std::size_t>(j)]) -= 1.0;
  }
  g_logits /= static_cast<double>(q_count);

  Gradients grads = Gradients::zero(head);
  // logits = exp(log_tau) * cosines, so dlogits/dlog_tau = logits.
  grads.d_log_tau = (g_logits.array() * f.logits.array()).sum();

  const Eigen::MatrixXd g_cos = tau * g_logits;                        // Q x N
  const Eigen::VectorXd gc_dot_cos_row =                               // per query
      (g_cos.array() * f.cosines.array()).rowwise().sum().matrix();
  const Eigen::VectorXd gc_dot_cos_col =                               // per class
      (g_cos.array() * f.cosines.array()).colwise().sum().matrix().transpose();

  Eigen::VectorXd inv_alpha(q_count);  // 1 / (||zq|| + eps)
  for (Eigen::Index j = 0; j < q_count; ++j) inv_alpha[j] = 1.0 / (f.query_znorm[j] + eps);
  Eigen::VectorXd inv_beta(n_way);  // 1 / (||p|| + eps)
  for (int c = 0; c < n_way; ++c) inv_beta[c] = 1.0 / (f.proto_norm[c] + eps);

  // Query branch: d cos(j,c)/d zq_j = p_c/(alpha beta) - cos * unit(zq_j)/alpha.
  Eigen::MatrixXd d_query_z(head.out_dim(), q_count);
  d_query_z.noalias() = (f.prototypes * inv_beta.asDiagonal()) * g_cos.transpose();
  d_query_z = d_query_z * inv_alpha.asDiagonal();
  for (Eigen::Index j = 0; j < q_count; ++j) {
    if (f.query_znorm[j] > 0.0) {
      d_query_z.col(j) -=
          f.query_z.col(j) * (gc_dot_cos_row[j] * inv_alpha[j] / f.query_znorm[j]);
    }
  }

  // Prototype branch, then spread over the class's support embeddings.
  Eigen::MatrixXd d_proto(head.out_dim(), n_way);
  d_proto.noalias() = (f.query_z * inv_alpha.asDiagonal()) * g_cos;
  d_proto = d_proto * inv_beta.asDiagonal();
  for (int c = 0; c < n_way; ++c) {
    if (f.proto_norm[c] > 0.0) {
      d_proto.col(c) -=
          f.prototypes.col(c) * (gc_dot_cos_col[c] * inv_beta[c] / f.proto_norm[c]);
    }
  }
  Eigen::MatrixXd d_support_z(head.out_dim(), s_count);
  const double inv_k = 1.0 / static_cast<double>(f.k_shot);
  for (Eigen::Index i = 0; i < s_count; ++i) {
    // Additive noise has identity Jacobian: d zhat/d z = I.
    d_support_z.col(i) = d_proto.col(f.support_class[static_cast<std::size_t>(i)]) * inv_k;
  }

  const Eigen::MatrixXd d_query_pre =
      normalize_backward(f.query_pre, f.query_prenorm, d_query_z, eps);
  const Eigen::MatrixXd d_support_pre =
      normalize_backward(f.support_pre, f.support_prenorm, d_support_z, eps);

  grads.d_weight.noalias() = d_query_pre * f.query_x.transpose();
  grads.d_weight.noalias() += d_support_pre * f.support_x.transpose();
  if (head.has_bias()) {
    grads.d_bias = d_query_pre.rowwise().sum() + d_support_pre.rowwise().sum();
  }
  return grads;
}

std::vector<int> predict(const EpisodeForward& forward) {
  std::vector<int> out(static_cast<std::size_t>(forward.logits.rows()));
  for (Eigen::Index j = 0; j < forward.logits.rows(); ++j) {
    int best = 0;
    for (int c = 1; c < forward.logits.cols(); ++c) {
      if (forward.logits(j, c) > forward.logits(j, best)) best = c;
    }
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

}  // namespace protochaos
