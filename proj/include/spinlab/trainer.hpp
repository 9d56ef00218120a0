// Mini-batch trainer for the rectifier network: momentum SGD or an adaptive
// (Adam-style) optimizer, optional annealed gradient perturbation, and a
// resampled-noise baseline for controlled comparisons.
//
// Determinism contract: with a fixed TrainConfig and MLPSpec the whole run
// is bitwise reproducible. The data split, batch order, perturbation
// direction, and baseline noise each draw from their own stream derived
// from cfg.seed, so enabling one feature never shifts another's randomness;
// in particular an annealed run and its baseline share initialization and
// batch schedule under the same seed.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spinlab/anneal.hpp"
#include "spinlab/dataset.hpp"
#include "spinlab/mlp.hpp"

namespace spinlab {

enum class OptimizerKind { SgdMomentum, Adaptive };
enum class NoiseBaseline { None, ResampledAnnealed };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::SgdMomentum;
  double lr = 0.01;
  double momentum = 0.9;  // SgdMomentum only
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // Fraction of the samples held out as validation when the dataset arrives
  // unsplit; a pre-split dataset is used as-is.
  double validation_fraction = 0.12;
  bool has_anneal = false;
  // With has_anneal set, p_est = 0 / n_est = 0 are filled in by the trainer:
  // p_est counts affine layers (each affine + rectifier block is one layer,
  // the softmax head included), n_est = estimate_shape(num_params, p_est).
  // The direction seed is derive_seed(cfg.seed, Perturbation, anneal.seed).
  AnnealConfig anneal;
  // ResampledAnnealed replaces the fixed direction with a fresh Gaussian
  // draw each step, scaled so its expected norm matches the annealed term's;
  // requires has_anneal for the schedule. The run's alignment metric then
  // tracks the current draw instead of a fixed direction.
  NoiseBaseline noise_baseline = NoiseBaseline::None;
};

struct TrainMetrics {
  // One entry per epoch.
  std::vector<double> loss;          // mean of per-step batch losses
  std::vector<double> val_error;     // percent at epoch end; 0 with no split
  std::vector<double> min_abs_grad;  // mean of per-step min |dloss/dw|,
                                     // measured before decay or perturbation
  std::vector<double> alignment;     // mean of per-step |h . w|
  std::vector<double> wall_seconds;  // only nondeterministic field
  // One entry per optimizer step, for fine-grained alignment analysis.
  std::vector<double> step_alignment;
  std::uint64_t steps = 0;
  Eigen::VectorXd final_params;
};

// |h . w|. Throws std::invalid_argument on length mismatch.
double alignment(const Eigen::VectorXd& w, const Eigen::VectorXd& h);

// Minimum absolute entry; 0 for an empty gradient.
double min_abs_gradient(const Eigen::VectorXd& grad);

// Runs the full training loop. Throws divergence_error when a batch loss
// turns non-finite, std::invalid_argument for inconsistent dimensions or
// parameters.
TrainMetrics train(const MLPSpec& spec, const Dataset& data,
                   const TrainConfig& cfg);

}  // namespace spinlab
