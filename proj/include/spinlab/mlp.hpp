// Fully-connected rectifier network with a softmax cross-entropy head,
// 64-bit throughout. Parameters live in one flat vector (per-layer weight
// matrix, then bias, in layer order) so optimizers and gradient
// perturbations can treat the network as a single point in R^d.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace spinlab {

struct MLPSpec {
  // widths[0] = input dim, widths.back() = classes, at least one hidden
  // layer in between; every width >= 1.
  std::vector<int> widths;
  double weight_decay = 0.0;  // applied by the trainer, not by loss gradients
  // Initial weight variance is init_gain / fan_in (2.0 = the usual rectifier
  // choice; 1.0 sits at the edge of the vanishing-gradient regime).
  double init_gain = 2.0;
  std::uint64_t init_seed = 0;
};

class MLP {
 public:
  explicit MLP(const MLPSpec& spec);

  const MLPSpec& spec() const { return spec_; }
  int layers() const { return static_cast<int>(spec_.widths.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  // Class scores (classes x batch) for inputs given as dim x batch columns.
  Eigen::MatrixXd scores(const Eigen::MatrixXd& inputs) const;

  // Mean cross-entropy over the batch. Gradient (same length as params())
  // is of the mean loss alone: no weight decay, no perturbation.
  double loss(const Eigen::MatrixXd& inputs,
              const std::vector<int>& labels) const;
  double loss_and_gradient(const Eigen::MatrixXd& inputs,
                           const std::vector<int>& labels,
                           Eigen::VectorXd& grad) const;

  // Argmax class per column; ties resolve to the lowest index.
  std::vector<int> predict(const Eigen::MatrixXd& inputs) const;
  // Misclassification rate in percent, in [0, 100].
  double error_percent(const Eigen::MatrixXd& inputs,
                       const std::vector<int>& labels) const;

 private:
  MLPSpec spec_;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> weight_offsets_;
  std::vector<Eigen::Index> bias_offsets_;
};

}  // namespace spinlab
