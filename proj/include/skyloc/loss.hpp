#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyloc/errors.hpp"

namespace skyloc {

// Two readings of the weight sigmoid. As printed, alpha(iou) = 1 - s(k*iou)
// decreases with overlap and vanishes as k grows; the increasing convention
// alpha(iou) = s(k*iou) is the one that degenerates to plain InfoNCE in the
// large-k limit, so it is the default.
enum class AlphaConvention { kAsPrinted, kIncreasing };

struct LossConfig {
  double k = 5.0;        // sigmoid sharpness of the pair weight
  double tau_init = 1.0; // temperature initialization (learnable)
  bool symmetric = true; // add the reference->query direction, averaged in
  AlphaConvention alpha_convention = AlphaConvention::kIncreasing;
  double margin = 1.0;   // triplet margin
};

inline void validate(const LossConfig& cfg) {
  if (!(cfg.k > 0.0)) throw DomainError("loss k must be positive");
  if (!(cfg.tau_init > 0.0)) throw DomainError("tau must be positive");
  if (!(cfg.margin >= 0.0)) throw DomainError("margin must be non-negative");
}

/// Pair weight alpha in (0, 1); both conventions give 0.5 at iou = 0.
inline double weight_alpha(double k, double iou_value,
                           AlphaConvention convention) {
  if (!(k > 0.0)) throw DomainError("weight_alpha requires k > 0");
  if (!(iou_value >= 0.0 && iou_value <= 1.0))
    throw DomainError("weight_alpha requires iou in [0, 1]");
  const double s = 1.0 / (1.0 + std::exp(-k * iou_value));
  return convention == AlphaConvention::kAsPrinted ? 1.0 - s : s;
}

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_queries;  // same shape as the query embeddings
  Eigen::MatrixXd grad_refs;     // same shape as the reference embeddings
  double grad_tau = 0.0;
};

namespace detail {

inline void check_batch_shapes(const Eigen::MatrixXd& queries,
                               const Eigen::MatrixXd& refs,
                               const std::vector<int>& positives) {
  if (queries.rows() == 0) throw ShapeError("empty batch");
  if (queries.rows() != refs.rows() || queries.cols() != refs.cols())
    throw ShapeError("query/reference embedding shapes differ");
  if (static_cast<Eigen::Index>(positives.size()) != queries.rows())
    throw ShapeError("positives size does not match batch size");
  for (int p : positives)
    if (p < 0 || p >= queries.rows())
      throw ShapeError("positive index out of range");
}

// Inverse of a permutation; throws when `positives` is not a permutation
// (required to mirror the loss for the symmetric direction).
inline std::vector<int> invert_permutation(const std::vector<int>& positives) {
  std::vector<int> inv(positives.size(), -1);
  for (std::size_t i = 0; i < positives.size(); ++i) {
    if (inv[positives[i]] != -1)
      throw ShapeError(
          "symmetric loss requires one distinct positive per reference");
    inv[positives[i]] = static_cast<int>(i);
  }
  return inv;
}

struct DirectionalLoss {
  double loss = 0.0;
  Eigen::MatrixXd grad_anchors;
  Eigen::MatrixXd grad_targets;
  double grad_tau = 0.0;
};

// One direction of the weighted loss over logits S = A * T' / tau.
// Per anchor i with weight a_i and positive p_i:
//   l_i = a_i * (-log softmax(S_i)[p_i])
//       + (1 - a_i) * mean_m(-log softmax(S_i)[m])
// reduced by the arithmetic mean over anchors. The uniform summand is
// divided by the batch size so its scale is batch-size independent.
inline DirectionalLoss weighted_direction(const Eigen::MatrixXd& anchors,
                                          const Eigen::MatrixXd& targets,
                                          const std::vector<int>& positives,
                                          const Eigen::VectorXd& alphas,
                                          double tau) {
  const Eigen::Index n = anchors.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  const Eigen::MatrixXd logits = anchors * targets.transpose() / tau;
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Eigen::MatrixXd shifted = logits.colwise() - row_max;
  const Eigen::MatrixXd exp_shifted = shifted.array().exp().matrix();
  const Eigen::VectorXd denom = exp_shifted.rowwise().sum();
  const Eigen::VectorXd lse = denom.array().log() + row_max.array();
  const Eigen::MatrixXd softmax =
      exp_shifted.array().colwise() / denom.array();

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pos_term = lse(i) - logits(i, positives[i]);
    const double unif_term = lse(i) - logits.row(i).mean();
    loss += alphas(i) * pos_term + (1.0 - alphas(i)) * unif_term;
  }
  loss *= inv_n;

  // dL/dS(i,j) = (1/n) * [softmax(i,j) - a_i*[j==p_i] - (1-a_i)/n]
  Eigen::MatrixXd grad_logits = softmax;
  for (Eigen::Index i = 0; i < n; ++i) {
    grad_logits.row(i).array() -= (1.0 - alphas(i)) * inv_n;
    grad_logits(i, positives[i]) -= alphas(i);
  }
  grad_logits *= inv_n;

  DirectionalLoss out;
  out.loss = loss;
  out.grad_anchors = grad_logits * targets / tau;
  out.grad_targets = grad_logits.transpose() * anchors / tau;
  out.grad_tau = -(grad_logits.array() * logits.array()).sum() / tau;
  return out;
}

inline LossResult weighted_infonce_impl(const Eigen::MatrixXd& queries,
                                        const Eigen::MatrixXd& refs,
                                        const std::vector<int>& positives,
                                        const Eigen::VectorXd& alphas,
                                        double tau, bool symmetric) {
  check_batch_shapes(queries, refs, positives);
  if (!(tau > 0.0)) throw DomainError("tau must be positive");

  LossResult result;
  const auto fwd = weighted_direction(queries, refs, positives, alphas, tau);
  if (!symmetric) {
    result.loss = fwd.loss;
    result.grad_queries = fwd.grad_anchors;
    result.grad_refs = fwd.grad_targets;
    result.grad_tau = fwd.grad_tau;
    return result;
  }

  const std::vector<int> inverse = invert_permutation(positives);
  Eigen::VectorXd mirrored_alphas(alphas.size());
  for (Eigen::Index j = 0; j < alphas.size(); ++j)
    mirrored_alphas(j) = alphas(inverse[j]);
  const auto bwd =
      weighted_direction(refs, queries, inverse, mirrored_alphas, tau);

  result.loss = 0.5 * (fwd.loss + bwd.loss);
  result.grad_queries = 0.5 * (fwd.grad_anchors + bwd.grad_targets);
  result.grad_refs = 0.5 * (fwd.grad_targets + bwd.grad_anchors);
  result.grad_tau = 0.5 * (fwd.grad_tau + bwd.grad_tau);
  return result;
}

}  // namespace detail

/// InfoNCE over in-batch logits F_q . F_r / tau with one designated positive
/// per query. Rows of `queries`/`refs` are embeddings.
inline LossResult infonce(const Eigen::MatrixXd& queries,
                          const Eigen::MatrixXd& refs,
                          const std::vector<int>& positives, double tau,
                          bool symmetric = true) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(queries.rows());
  return detail::weighted_infonce_impl(queries, refs, positives, ones, tau,
                                       symmetric);
}

/// Weighted InfoNCE: per query, a convex combination (by the IOU-derived
/// alpha) of the InfoNCE term and a uniform term over all references.
inline LossResult weighted_infonce(const Eigen::MatrixXd& queries,
                                   const Eigen::MatrixXd& refs,
                                   const std::vector<int>& positives,
                                   const Eigen::VectorXd& ious, double tau,
                                   const LossConfig& cfg) {
  validate(cfg);
  detail::check_batch_shapes(queries, refs, positives);
  if (ious.size() != queries.rows())
    throw ShapeError("one IOU per query/positive pair is required");
  Eigen::VectorXd alphas(ious.size());
  for (Eigen::Index i = 0; i < ious.size(); ++i) {
    if (!(ious(i) >= 0.0 && ious(i) <= 1.0))
      throw DomainError("pair IOU outside [0, 1]");
    alphas(i) = weight_alpha(cfg.k, ious(i), cfg.alpha_convention);
  }
  return detail::weighted_infonce_impl(queries, refs, positives, alphas, tau,
                                       cfg.symmetric);
}

struct TripletResult {
  double loss = 0.0;
  Eigen::VectorXd grad_anchor;
  Eigen::VectorXd grad_positive;
  Eigen::VectorXd grad_negative;
};

/// Hinge triplet loss max(0, margin + d(a,p) - d(a,n)) with Euclidean
/// distances; subgradient 0 at the hinge.
inline TripletResult triplet(const Eigen::VectorXd& anchor,
                             const Eigen::VectorXd& positive,
                             const Eigen::VectorXd& negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size())
    throw ShapeError("triplet embeddings must share one dimension");

  TripletResult result;
  result.grad_anchor = Eigen::VectorXd::Zero(anchor.size());
  result.grad_positive = Eigen::VectorXd::Zero(anchor.size());
  result.grad_negative = Eigen::VectorXd::Zero(anchor.size());

  const Eigen::VectorXd ap = anchor - positive;
  const Eigen::VectorXd an = anchor - negative;
  const double d_ap = ap.norm();
  const double d_an = an.norm();
  const double hinge = margin + d_ap - d_an;
  if (hinge <= 0.0) return result;

  result.loss = hinge;
  if (d_ap > 0.0) {
    result.grad_anchor += ap / d_ap;
    result.grad_positive -= ap / d_ap;
  }
  if (d_an > 0.0) {
    result.grad_anchor -= an / d_an;
    result.grad_negative += an / d_an;
  }
  return result;
}

}  // namespace skyloc
