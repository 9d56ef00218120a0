// Annealed gradient perturbation: a fixed random direction h added to every
// gradient with a decaying scale s_i.
//
// The direction is sampled once per training run with per-component standard
// deviation J sqrt(p(p-2)) from the estimated shape (p layers, n effective
// neurons) of the network. The default schedule follows
// tau(i) = n (e^{-i/tau0} - 1/2), giving s_i = (1 + 2 tau(i)/n)^{1/2} =
// sqrt(2) e^{-i/(2 tau0)}: the effective field starts at sqrt(2) nu_c,
// crosses nu_c at i = tau0 ln 2, and decays to zero, so training ends
// unbiased. The engine only transforms gradients; the base optimizer owns
// the update rule.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace spinlab {

enum class ScheduleKind { TauExponential, Kappa, Linear };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_from_string(const std::string& name);

struct AnnealConfig {
  double J = 1e-3;
  double tau0 = 500.0;
  ScheduleKind schedule = ScheduleKind::TauExponential;
  int p_est = 0;    // layer count; filled in by the trainer
  int n_est = 0;    // effective neuron count; filled in via estimate_shape
  std::uint64_t seed = 0;
  // Linear schedule: step at which the scale reaches zero; 0 means 10*tau0.
  double linear_horizon = 0.0;
};

// floor(sqrt(num_weights / p)), at least 1. Requires num_weights >= p >= 1.
int estimate_shape(std::uint64_t num_weights, int p);

// Fixed direction with per-component std J sqrt(p(p-2)); zero for J = 0 or
// p = 2. Requires p >= 2.
Eigen::VectorXd sample_perturbation(Eigen::Index num_weights, double J, int p,
                                    std::uint64_t seed);

// tau(i) = n (e^{-i/tau0} - 1/2): starts at n/2, decreasing, limit -n/2.
double tau_schedule(double i, double tau0, double n_est);

// (1 + 2 tau/n)^{1/2}. Requires tau > -n/2.
double scale_factor(double tau, double n_est);

// (1 + kappa log(n)/n^{1/3})^{1/2}. Requires a positive argument.
double kappa_scale_factor(double kappa, double n_est);

// Owns the fixed direction and the iteration counter of one training run.
class PerturbationState {
 public:
  PerturbationState(const AnnealConfig& cfg, Eigen::Index num_weights);

  const Eigen::VectorXd& direction() const { return h_; }
  std::uint64_t iteration() const { return i_; }
  double current_scale() const;

  // g += s_i * h, then advances the iteration counter. The add is skipped
  // entirely when s_i * h is identically zero so a J = 0 run stays
  // bit-identical to an unperturbed one.
  void perturb_gradient(Eigen::VectorXd& g);

  // Advances the iteration counter without touching any gradient; used by
  // baselines that consume the schedule but substitute their own noise.
  void advance() { ++i_; }

 private:
  AnnealConfig cfg_;
  Eigen::VectorXd h_;
  std::uint64_t i_ = 0;
  bool active_ = true;
};

}  // namespace spinlab
