#include "spinlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

double alignment(const Eigen::VectorXd& w, const Eigen::VectorXd& h) {
  if (w.size() != h.size()) {
    throw std::invalid_argument("alignment: length mismatch");
  }
  return std::abs(h.dot(w));
}

double min_abs_gradient(const Eigen::VectorXd& grad) {
  return grad.size() == 0 ? 0.0 : grad.cwiseAbs().minCoeff();
}

TrainMetrics train(const MLPSpec& spec, const Dataset& data,
                   const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs < 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (!std::isfinite(cfg.lr) || cfg.lr < 0.0) {
    throw std::invalid_argument("train: learning rate must be finite and >= 0");
  }
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw std::invalid_argument("train: momentum outside [0, 1)");
  }
  if (cfg.noise_baseline != NoiseBaseline::None && !cfg.has_anneal) {
    throw std::invalid_argument(
        "train: the resampled baseline needs the anneal schedule");
  }
  if (data.samples() == 0) throw std::invalid_argument("train: empty dataset");
  if (data.dim() != spec.widths.front()) {
    throw std::invalid_argument("train: feature dim does not match input width");
  }
  for (int y : data.labels) {
    if (y < 0 || y >= spec.widths.back()) {
      throw std::invalid_argument("train: label outside the output width");
    }
  }

  Dataset working = data;
  if (!working.has_split()) {
    shuffle_and_split(working, cfg.validation_fraction,
                      derive_seed(cfg.seed, Stream::DataSplit));
  }
  const Eigen::Index train_count = working.train_count();
  const Eigen::Index val_count = working.validation_count();
  if (train_count < 1) throw std::invalid_argument("train: no training samples");
  const Eigen::Index dim = working.dim();

  Eigen::MatrixXd val_inputs(dim, val_count);
  std::vector<int> val_labels(static_cast<std::size_t>(val_count));
  for (Eigen::Index j = 0; j < val_count; ++j) {
    const Eigen::Index row = working.validation_start + j;
    val_inputs.col(j) = working.features.row(row).transpose();
    val_labels[static_cast<std::size_t>(j)] =
        working.labels[static_cast<std::size_t>(row)];
  }

  MLP net(spec);
  const Eigen::Index dof = net.num_params();

  std::optional<PerturbationState> state;
  double direction_norm = 0.0;
  if (cfg.has_anneal) {
    AnnealConfig acfg = cfg.anneal;
    if (acfg.p_est == 0) acfg.p_est = net.layers();
    if (acfg.n_est == 0) {
      acfg.n_est =
          estimate_shape(static_cast<std::uint64_t>(dof), acfg.p_est);
    }
    acfg.seed = derive_seed(cfg.seed, Stream::Perturbation, acfg.seed);
    state.emplace(acfg, dof);
    direction_norm = state->direction().norm();
  }
  GaussianStream noise(derive_seed(cfg.seed, Stream::NoiseBaseline));

  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(dof);
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(dof);
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(dof);
  std::uint64_t adam_t = 0;

  TrainMetrics metrics;
  Eigen::VectorXd grad(dof);
  Eigen::VectorXd resampled(dof);
  Eigen::MatrixXd batch_inputs;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tick = std::chrono::steady_clock::now();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(train_count));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Xoshiro256 shuffle(derive_seed(cfg.seed, Stream::BatchShuffle,
                                   static_cast<std::uint64_t>(epoch)));
    for (Eigen::Index i = train_count - 1; i > 0; --i) {
      const Eigen::Index j = std::min<Eigen::Index>(
          static_cast<Eigen::Index>(shuffle.uniform() *
                                    static_cast<double>(i + 1)),
          i);
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double loss_sum = 0.0;
    double min_grad_sum = 0.0;
    double align_sum = 0.0;
    int steps_this_epoch = 0;

    for (Eigen::Index start = 0; start < train_count;
         start += cfg.batch_size) {
      const Eigen::Index count =
          std::min<Eigen::Index>(cfg.batch_size, train_count - start);
      // Canonical intra-batch order: the loss and gradient of a batch depend
      // on its membership, not on the visit order the shuffle produced, so
      // e.g. full-batch epochs repeat bitwise.
      std::sort(order.begin() + start, order.begin() + start + count);
      batch_inputs.resize(dim, count);
      batch_labels.resize(static_cast<std::size_t>(count));
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index row = order[static_cast<std::size_t>(start + j)];
        batch_inputs.col(j) = working.features.row(row).transpose();
        batch_labels[static_cast<std::size_t>(j)] =
            working.labels[static_cast<std::size_t>(row)];
      }

      const double loss =
          net.loss_and_gradient(batch_inputs, batch_labels, grad);
      if (!std::isfinite(loss)) {
        throw divergence_error("training diverged at epoch " +
                               std::to_string(epoch + 1) + ", step " +
                               std::to_string(metrics.steps + 1) +
                               ": non-finite batch loss");
      }
      loss_sum += loss;
      // Diagnostic reads the raw backprop gradient, before decay or field.
      min_grad_sum += min_abs_gradient(grad);

      if (spec.weight_decay != 0.0) {
        grad += spec.weight_decay * net.params();
      }

      double step_align = 0.0;
      if (state.has_value()) {
        if (cfg.noise_baseline == NoiseBaseline::ResampledAnnealed) {
          if (direction_norm > 0.0) {
            noise.fill(resampled.data(), resampled.size());
            resampled *= direction_norm / std::sqrt(static_cast<double>(dof));
            step_align = alignment(net.params(), resampled);
            grad += state->current_scale() * resampled;
          }
          state->advance();
        } else {
          step_align = alignment(net.params(), state->direction());
          state->perturb_gradient(grad);
        }
      }
      align_sum += step_align;
      metrics.step_alignment.push_back(step_align);

      switch (cfg.optimizer) {
        case OptimizerKind::SgdMomentum:
          velocity = cfg.momentum * velocity + grad;
          net.params() -= cfg.lr * velocity;
          break;
        case OptimizerKind::Adaptive: {
          ++adam_t;
          adam_m = cfg.adam_beta1 * adam_m + (1.0 - cfg.adam_beta1) * grad;
          adam_v = cfg.adam_beta2 * adam_v +
                   (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
          const double m_corr =
              1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
          const double v_corr =
              1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
          net.params().array() -=
              cfg.lr * (adam_m.array() / m_corr) /
              ((adam_v.array() / v_corr).sqrt() + cfg.adam_eps);
          break;
        }
      }
      ++steps_this_epoch;
      ++metrics.steps;
    }

    metrics.loss.push_back(loss_sum / steps_this_epoch);
    metrics.min_abs_grad.push_back(min_grad_sum / steps_this_epoch);
    metrics.alignment.push_back(align_sum / steps_this_epoch);
    metrics.val_error.push_back(
        val_count > 0 ? net.error_percent(val_inputs, val_labels) : 0.0);
    metrics.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick)
            .count());
  }
  metrics.final_params = net.params();
  return metrics;
}

}  // namespace spinlab
