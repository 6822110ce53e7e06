#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyloc/errors.hpp"
#include "skyloc/features.hpp"
#include "skyloc/loss.hpp"
#include "skyloc/rng.hpp"
#include "skyloc/sampling.hpp"

namespace skyloc {

enum class LossKind { kTriplet, kInfonce, kWeightedInfonce };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double learning_rate = 1e-4;  // cosine-decayed to zero over all steps
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::kWeightedInfonce;
  LossConfig loss;
  DataMode data_mode = DataMode::kPositiveSemi;
  int embed_dim = 32;
  bool shared_weights = true;
  bool strict_sampling = false;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw DomainError("epochs must be >= 1");
  if (cfg.batch_size < 2) throw DomainError("batch size must be >= 2");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
    throw DomainError("learning rate must be finite and non-negative");
  if (cfg.embed_dim < 1) throw DomainError("embed_dim must be >= 1");
  validate(cfg.loss);
}

/// Cosine decay from `base` at step 0 to 0 at step total-1.
inline double cosine_lr(double base, std::int64_t step,
                        std::int64_t total_steps) {
  if (total_steps <= 1) return base;
  const double progress =
      static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return base * 0.5 * (1.0 + std::cos(kPi * progress));
}

// One affine layer per view followed by L2 normalization; the reference
// side shares the query weights unless configured otherwise.
struct EmbedModel {
  int input_dim = 0;
  int embed_dim = 0;
  bool shared = true;
  Eigen::MatrixXd w_query, w_ref;  // embed_dim x input_dim
  Eigen::VectorXd b_query, b_ref;
  double tau = 1.0;

  static EmbedModel init(int input_dim, int embed_dim, bool shared,
                         double tau_init, std::uint64_t seed) {
    EmbedModel model;
    model.input_dim = input_dim;
    model.embed_dim = embed_dim;
    model.shared = shared;
    model.tau = tau_init;
    StreamRng rng(seed, {0x696e6974ULL});  // weight-init stream
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    auto fill = [&](Eigen::MatrixXd& w) {
      w.resize(embed_dim, input_dim);
      for (int i = 0; i < embed_dim; ++i)
        for (int j = 0; j < input_dim; ++j) w(i, j) = scale * rng.normal();
    };
    fill(model.w_query);
    model.b_query = Eigen::VectorXd::Zero(embed_dim);
    if (!shared) {
      fill(model.w_ref);
      model.b_ref = Eigen::VectorXd::Zero(embed_dim);
    }
    return model;
  }

  const Eigen::MatrixXd& weights(bool ref_side) const {
    return (ref_side && !shared) ? w_ref : w_query;
  }
  const Eigen::VectorXd& bias(bool ref_side) const {
    return (ref_side && !shared) ? b_ref : b_query;
  }

  /// Unit-norm embeddings for a batch of input rows.
  Eigen::MatrixXd embed(const Eigen::MatrixXd& inputs, bool ref_side) const {
    if (inputs.cols() != input_dim)
      throw ShapeError("input feature dimension does not match the model");
    Eigen::MatrixXd raw = inputs * weights(ref_side).transpose();
    raw.rowwise() += bias(ref_side).transpose();
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double norm = raw.row(i).norm();
      if (!(norm > 1e-12))
        throw NonFiniteError("embedding collapsed to zero norm");
      raw.row(i) /= norm;
    }
    return raw;
  }
};

struct StepRecord {
  int epoch = 0;
  int batch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  EmbedModel model;
  std::vector<double> epoch_mean_loss;
  std::vector<StepRecord> steps;
};

namespace detail {

struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(const Eigen::MatrixXd& shape_like)
      : m(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())),
        v(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())) {}
};

inline void adam_step(Eigen::MatrixXd& param, AdamState& state,
                      const Eigen::MatrixXd& grad, double lr,
                      std::int64_t t) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  state.m = kBeta1 * state.m + (1.0 - kBeta1) * grad;
  state.v = kBeta2 * state.v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
  const Eigen::MatrixXd m_hat = state.m / bc1;
  const Eigen::MatrixXd v_hat = state.v / bc2;
  param.array() -=
      lr * m_hat.array() / (v_hat.array().sqrt() + kEps);
}

// Gradient of row-normalized embeddings back to the raw affine output:
// for y = z/|z|, g_z = (g_y - (g_y . y) y) / |z|.
inline Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& unit,
                                          const Eigen::MatrixXd& raw_norms,
                                          const Eigen::MatrixXd& grad_unit) {
  Eigen::MatrixXd grad_raw(grad_unit.rows(), grad_unit.cols());
  for (Eigen::Index i = 0; i < grad_unit.rows(); ++i) {
    const double dot = grad_unit.row(i).dot(unit.row(i));
    grad_raw.row(i) =
        (grad_unit.row(i) - dot * unit.row(i)) / raw_norms(i, 0);
  }
  return grad_raw;
}

// Mean batch-all triplet: every non-paired in-batch reference serves as a
// negative for every anchor.
inline LossResult batch_all_triplet(const Eigen::MatrixXd& queries,
                                    const Eigen::MatrixXd& refs,
                                    double margin) {
  const Eigen::Index n = queries.rows();
  if (n < 2) throw ShapeError("triplet training needs at least 2 pairs");
  LossResult out;
  out.grad_queries = Eigen::MatrixXd::Zero(n, queries.cols());
  out.grad_refs = Eigen::MatrixXd::Zero(n, refs.cols());
  const double inv_count = 1.0 / static_cast<double>(n * (n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto res =
          triplet(queries.row(i).transpose(), refs.row(i).transpose(),
                  refs.row(j).transpose(), margin);
      out.loss += inv_count * res.loss;
      out.grad_queries.row(i) += inv_count * res.grad_anchor.transpose();
      out.grad_refs.row(i) += inv_count * res.grad_positive.transpose();
      out.grad_refs.row(j) += inv_count * res.grad_negative.transpose();
    }
  }
  return out;
}

}  // namespace detail

/// Trains the embedding model over the pair graph with mutually exclusive
/// batches. Fully deterministic for a fixed config; throws NonFiniteError
/// before any step would apply a non-finite update.
inline TrainResult train(const TrainConfig& cfg,
                         const std::vector<PairRecord>& pairs,
                         const FeatureSet& features) {
  validate(cfg);
  validate(features);

  const auto graph = PairGraph::from_pairs(pairs, cfg.data_mode);
  const int input_dim = features.dim();

  // Sample every epoch up front so the cosine schedule knows its horizon.
  std::vector<std::vector<Batch>> epochs;
  std::int64_t total_steps = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    const std::uint64_t epoch_seed =
        derive_seed(cfg.seed, {0x65706f6368ULL, static_cast<std::uint64_t>(e)});
    auto batches = cfg.strict_sampling
                       ? strict_sample_epoch(graph, cfg.batch_size, epoch_seed)
                       : sample_epoch(graph, cfg.batch_size, epoch_seed);
    total_steps += static_cast<std::int64_t>(batches.size());
    epochs.push_back(std::move(batches));
  }

  TrainResult result;
  result.model = EmbedModel::init(input_dim, cfg.embed_dim,
                                  cfg.shared_weights, cfg.loss.tau_init,
                                  cfg.seed);
  EmbedModel& model = result.model;

  detail::AdamState state_wq(model.w_query);
  detail::AdamState state_bq(model.b_query);
  detail::AdamState state_wr(cfg.shared_weights ? model.w_query : model.w_ref);
  detail::AdamState state_br(cfg.shared_weights ? model.b_query : model.b_ref);
  Eigen::MatrixXd tau_param(1, 1), tau_grad(1, 1);
  detail::AdamState state_tau(tau_param);

  std::vector<int> positives(cfg.batch_size);
  for (int i = 0; i < cfg.batch_size; ++i) positives[i] = i;

  std::int64_t step = 0;
  std::int64_t adam_t = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (const Batch& batch : epochs[e]) {
      const int n = static_cast<int>(batch.size());
      Eigen::MatrixXd x_query(n, input_dim), x_ref(n, input_dim);
      Eigen::VectorXd ious(n);
      for (int i = 0; i < n; ++i) {
        x_query.row(i) =
            features.query_feature(batch[i].query_id).cast<double>();
        x_ref.row(i) = features.tile_feature(batch[i].tile).cast<double>();
        ious(i) = batch[i].iou;
      }

      // forward
      Eigen::MatrixXd raw_q = x_query * model.weights(false).transpose();
      raw_q.rowwise() += model.bias(false).transpose();
      Eigen::MatrixXd raw_r = x_ref * model.weights(true).transpose();
      raw_r.rowwise() += model.bias(true).transpose();
      Eigen::MatrixXd norms_q(n, 1), norms_r(n, 1);
      Eigen::MatrixXd unit_q = raw_q, unit_r = raw_r;
      for (int i = 0; i < n; ++i) {
        norms_q(i, 0) = raw_q.row(i).norm();
        norms_r(i, 0) = raw_r.row(i).norm();
        if (!(norms_q(i, 0) > 1e-12) || !(norms_r(i, 0) > 1e-12))
          throw NonFiniteError("embedding collapsed to zero norm");
        unit_q.row(i) /= norms_q(i, 0);
        unit_r.row(i) /= norms_r(i, 0);
      }

      LossResult loss_result;
      switch (cfg.loss_kind) {
        case LossKind::kTriplet:
          loss_result =
              detail::batch_all_triplet(unit_q, unit_r, cfg.loss.margin);
          break;
        case LossKind::kInfonce:
          loss_result =
              infonce(unit_q, unit_r, positives, model.tau,
                      cfg.loss.symmetric);
          break;
        case LossKind::kWeightedInfonce:
          loss_result = weighted_infonce(unit_q, unit_r, positives, ious,
                                         model.tau, cfg.loss);
          break;
      }

      if (!std::isfinite(loss_result.loss))
        throw NonFiniteError("training loss is not finite");
      if (!loss_result.grad_queries.allFinite() ||
          !loss_result.grad_refs.allFinite() ||
          !std::isfinite(loss_result.grad_tau))
        throw NonFiniteError("training gradient is not finite");

      // backward through normalization and the affine layers
      const Eigen::MatrixXd grad_raw_q = detail::normalize_backward(
          unit_q, norms_q, loss_result.grad_queries);
      const Eigen::MatrixXd grad_raw_r =
          detail::normalize_backward(unit_r, norms_r, loss_result.grad_refs);
      Eigen::MatrixXd grad_wq = grad_raw_q.transpose() * x_query;
      Eigen::VectorXd grad_bq = grad_raw_q.colwise().sum();
      Eigen::MatrixXd grad_wr = grad_raw_r.transpose() * x_ref;
      Eigen::VectorXd grad_br = grad_raw_r.colwise().sum();

      const double lr = cosine_lr(cfg.learning_rate, step, total_steps);
      ++adam_t;
      if (cfg.shared_weights) {
        // both view directions accumulate into one parameter set
        const Eigen::MatrixXd grad_w = grad_wq + grad_wr;
        const Eigen::MatrixXd grad_b = grad_bq + grad_br;  // column vector
        detail::adam_step(model.w_query, state_wq, grad_w, lr, adam_t);
        Eigen::MatrixXd bias = model.b_query;
        detail::adam_step(bias, state_bq, grad_b, lr, adam_t);
        model.b_query = bias.col(0);
      } else {
        detail::adam_step(model.w_query, state_wq, grad_wq, lr, adam_t);
        Eigen::MatrixXd bq = model.b_query;
        detail::adam_step(bq, state_bq, Eigen::MatrixXd(grad_bq), lr, adam_t);
        model.b_query = bq.col(0);
        detail::adam_step(model.w_ref, state_wr, grad_wr, lr, adam_t);
        Eigen::MatrixXd br = model.b_ref;
        detail::adam_step(br, state_br, Eigen::MatrixXd(grad_br), lr, adam_t);
        model.b_ref = br.col(0);
      }
      tau_param(0, 0) = model.tau;
      tau_grad(0, 0) = loss_result.grad_tau;
      detail::adam_step(tau_param, state_tau, tau_grad, lr, adam_t);
      model.tau = std::max(tau_param(0, 0), 1e-3);

      epoch_loss += loss_result.loss;
      result.steps.push_back(
          {e, batch_index, lr, loss_result.loss});
      ++batch_index;
      ++step;
    }
    result.epoch_mean_loss.push_back(
        epoch_loss / static_cast<double>(epochs[e].size()));
  }
  return result;
}

}  // namespace skyloc
