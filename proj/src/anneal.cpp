#include "spinlab/anneal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spinlab/rng.hpp"

namespace spinlab {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::TauExponential: return "tau_exp";
    case ScheduleKind::Kappa: return "kappa";
    case ScheduleKind::Linear: return "linear";
  }
  return "?";
}

ScheduleKind schedule_from_string(const std::string& name) {
  if (name == "tau_exp") return ScheduleKind::TauExponential;
  if (name == "kappa") return ScheduleKind::Kappa;
  if (name == "linear") return ScheduleKind::Linear;
  throw std::invalid_argument("unknown schedule '" + name +
                              "' (expected tau_exp, kappa, or linear)");
}

int estimate_shape(std::uint64_t num_weights, int p) {
  if (p < 1) throw std::invalid_argument("shape estimate needs p >= 1");
  if (num_weights < static_cast<std::uint64_t>(p)) {
    throw std::invalid_argument("shape estimate needs num_weights >= p");
  }
  const double q = static_cast<double>(num_weights) / static_cast<double>(p);
  const int n = static_cast<int>(std::floor(std::sqrt(q)));
  return n < 1 ? 1 : n;
}

Eigen::VectorXd sample_perturbation(Eigen::Index num_weights, double J, int p,
                                    std::uint64_t seed) {
  if (p < 2) throw std::invalid_argument("perturbation needs p >= 2");
  if (J < 0.0) throw std::invalid_argument("coupling must be >= 0");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(num_weights);
  const double std_dev = J * std::sqrt(static_cast<double>(p) * (p - 2.0));
  if (std_dev > 0.0) {
    GaussianStream g(seed);
    g.fill(h.data(), static_cast<std::size_t>(num_weights));
    h *= std_dev;
  }
  return h;
}

double tau_schedule(double i, double tau0, double n_est) {
  if (tau0 <= 0.0) throw std::invalid_argument("tau0 must be positive");
  return n_est * (std::exp(-i / tau0) - 0.5);
}

double scale_factor(double tau, double n_est) {
  const double arg = 1.0 + 2.0 * tau / n_est;
  if (arg <= 0.0) throw std::invalid_argument("scale needs tau > -n/2");
  return std::sqrt(arg);
}

double kappa_scale_factor(double kappa, double n_est) {
  const double arg = 1.0 + kappa * std::log(n_est) / std::cbrt(n_est);
  if (arg <= 0.0) {
    throw std::invalid_argument("kappa scale needs a positive argument");
  }
  return std::sqrt(arg);
}

PerturbationState::PerturbationState(const AnnealConfig& cfg,
                                     Eigen::Index num_weights)
    : cfg_(cfg) {
  if (cfg.tau0 <= 0.0) throw std::invalid_argument("tau0 must be positive");
  if (cfg.p_est < 2) throw std::invalid_argument("p_est must be >= 2");
  if (cfg.n_est < 1) throw std::invalid_argument("n_est must be >= 1");
  h_ = sample_perturbation(num_weights, cfg.J, cfg.p_est, cfg.seed);
  active_ = h_.cwiseAbs().maxCoeff() > 0.0;
}

double PerturbationState::current_scale() const {
  const double i = static_cast<double>(i_);
  switch (cfg_.schedule) {
    case ScheduleKind::TauExponential:
      // Algebraically (1 + 2 tau(i)/n)^{1/2}; this closed form avoids the
      // cancellation at large i where tau(i) rounds to exactly -n/2.
      return std::numbers::sqrt2 * std::exp(-i / (2.0 * cfg_.tau0));
    case ScheduleKind::Kappa: {
      // kappa decays linearly from +n^{1/3}/log n (scale sqrt(2)) through 0
      // (scale 1, reached at tau0 ln 2 like the default schedule) to the
      // trivialization boundary, then stays at zero scale.
      if (cfg_.n_est < 2) return 1.0;  // log(1) = 0: field pinned at nu_c
      const double half_life = cfg_.tau0 * std::numbers::ln2;
      const double kappa_max =
          std::cbrt(static_cast<double>(cfg_.n_est)) / std::log(cfg_.n_est);
      const double kappa = kappa_max * (1.0 - i / half_life);
      const double arg =
          1.0 + kappa * std::log(cfg_.n_est) / std::cbrt(cfg_.n_est);
      return arg > 0.0 ? std::sqrt(arg) : 0.0;
    }
    case ScheduleKind::Linear: {
      const double horizon =
          cfg_.linear_horizon > 0.0 ? cfg_.linear_horizon : 10.0 * cfg_.tau0;
      const double f = 1.0 - i / horizon;
      return f > 0.0 ? std::numbers::sqrt2 * f : 0.0;
    }
  }
  return 0.0;
}

void PerturbationState::perturb_gradient(Eigen::VectorXd& g) {
  if (g.size() != h_.size()) {
    throw std::invalid_argument("gradient length does not match direction");
  }
  if (active_) {
    const double s = current_scale();
    if (s > 0.0) g += s * h_;
  }
  ++i_;
}

}  // namespace spinlab
