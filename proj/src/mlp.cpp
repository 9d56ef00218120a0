#include "spinlab/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

void check_batch(const MLPSpec& spec, const Eigen::MatrixXd& inputs,
                 const std::vector<int>& labels) {
  if (inputs.rows() != spec.widths.front()) {
    throw std::invalid_argument("MLP: input rows do not match input width");
  }
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols()) {
    throw std::invalid_argument("MLP: label count does not match batch size");
  }
  if (inputs.cols() == 0) throw std::invalid_argument("MLP: empty batch");
  for (int y : labels) {
    if (y < 0 || y >= spec.widths.back()) {
      throw std::invalid_argument("MLP: label outside [0, classes)");
    }
  }
}

// Mean cross-entropy via per-column max-shifted logsumexp; when probs is
// given it receives the softmax of every column.
double cross_entropy(const Eigen::MatrixXd& scores,
                     const std::vector<int>& labels, Eigen::MatrixXd* probs) {
  const Eigen::Index batch = scores.cols();
  if (probs != nullptr) probs->resize(scores.rows(), batch);
  double loss = 0.0;
  Eigen::VectorXd column;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double peak = scores.col(b).maxCoeff();
    column = (scores.col(b).array() - peak).exp();
    const double z = column.sum();
    loss += std::log(z) - (scores(labels[static_cast<std::size_t>(b)], b) - peak);
    if (probs != nullptr) probs->col(b) = column / z;
  }
  return loss / static_cast<double>(batch);
}

}  // namespace

MLP::MLP(const MLPSpec& spec) : spec_(spec) {
  if (spec_.widths.size() < 3) {
    throw std::invalid_argument(
        "MLP: widths must list input, at least one hidden layer, and output");
  }
  for (int w : spec_.widths) {
    if (w < 1) throw std::invalid_argument("MLP: every width must be >= 1");
  }
  if (!(spec_.init_gain > 0.0)) {
    throw std::invalid_argument("MLP: init_gain must be positive");
  }

  Eigen::Index total = 0;
  for (int l = 0; l < layers(); ++l) {
    weight_offsets_.push_back(total);
    total += static_cast<Eigen::Index>(spec_.widths[l + 1]) * spec_.widths[l];
    bias_offsets_.push_back(total);
    total += spec_.widths[l + 1];
  }
  params_.setZero(total);

  GaussianStream g(derive_seed(spec_.init_seed, Stream::NetInit));
  for (int l = 0; l < layers(); ++l) {
    auto w = weight(l);
    g.fill(w.data(), w.size());
    w *= std::sqrt(spec_.init_gain / static_cast<double>(spec_.widths[l]));
    // biases start at zero
  }
}

Eigen::Map<Eigen::MatrixXd> MLP::weight(int layer) {
  return {params_.data() + weight_offsets_[layer], spec_.widths[layer + 1],
          spec_.widths[layer]};
}

Eigen::Map<const Eigen::MatrixXd> MLP::weight(int layer) const {
  return {params_.data() + weight_offsets_[layer], spec_.widths[layer + 1],
          spec_.widths[layer]};
}

Eigen::Map<Eigen::VectorXd> MLP::bias(int layer) {
  return {params_.data() + bias_offsets_[layer], spec_.widths[layer + 1]};
}

Eigen::Map<const Eigen::VectorXd> MLP::bias(int layer) const {
  return {params_.data() + bias_offsets_[layer], spec_.widths[layer + 1]};
}

Eigen::MatrixXd MLP::scores(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != spec_.widths.front()) {
    throw std::invalid_argument("MLP: input rows do not match input width");
  }
  Eigen::MatrixXd act = inputs;
  for (int l = 0; l < layers(); ++l) {
    Eigen::MatrixXd next = weight(l) * act;
    next.colwise() += bias(l);
    if (l + 1 < layers()) next = next.cwiseMax(0.0);
    act.swap(next);
  }
  return act;
}

double MLP::loss(const Eigen::MatrixXd& inputs,
                 const std::vector<int>& labels) const {
  check_batch(spec_, inputs, labels);
  return cross_entropy(scores(inputs), labels, nullptr);
}

double MLP::loss_and_gradient(const Eigen::MatrixXd& inputs,
                              const std::vector<int>& labels,
                              Eigen::VectorXd& grad) const {
  check_batch(spec_, inputs, labels);
  const int depth = layers();
  const Eigen::Index batch = inputs.cols();

  // Forward pass keeping every post-activation output for backprop; the
  // rectifier mask is recoverable from the output (relu(x) > 0 iff x > 0).
  std::vector<Eigen::MatrixXd> acts(static_cast<std::size_t>(depth));
  const Eigen::MatrixXd* below = &inputs;
  for (int l = 0; l < depth; ++l) {
    acts[l].noalias() = weight(l) * (*below);
    acts[l].colwise() += bias(l);
    if (l + 1 < depth) acts[l] = acts[l].cwiseMax(0.0);
    below = &acts[l];
  }

  Eigen::MatrixXd delta;
  const double loss = cross_entropy(acts[depth - 1], labels, &delta);
  for (Eigen::Index b = 0; b < batch; ++b) {
    delta(labels[static_cast<std::size_t>(b)], b) -= 1.0;
  }
  delta /= static_cast<double>(batch);

  grad.setZero(num_params());
  for (int l = depth - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = l == 0 ? inputs : acts[l - 1];
    Eigen::Map<Eigen::MatrixXd> dw(grad.data() + weight_offsets_[l],
                                   spec_.widths[l + 1], spec_.widths[l]);
    dw.noalias() = delta * input.transpose();
    Eigen::Map<Eigen::VectorXd> db(grad.data() + bias_offsets_[l],
                                   spec_.widths[l + 1]);
    db = delta.rowwise().sum();
    if (l > 0) {
      const Eigen::MatrixXd up = weight(l).transpose() * delta;
      delta = (acts[l - 1].array() > 0.0).select(up, 0.0);
    }
  }
  return loss;
}

std::vector<int> MLP::predict(const Eigen::MatrixXd& inputs) const {
  const Eigen::MatrixXd s = scores(inputs);
  std::vector<int> out(static_cast<std::size_t>(s.cols()));
  for (Eigen::Index b = 0; b < s.cols(); ++b) {
    Eigen::Index best = 0;
    s.col(b).maxCoeff(&best);  // first maximum wins ties
    out[static_cast<std::size_t>(b)] = static_cast<int>(best);
  }
  return out;
}

double MLP::error_percent(const Eigen::MatrixXd& inputs,
                          const std::vector<int>& labels) const {
  check_batch(spec_, inputs, labels);
  const std::vector<int> got = predict(inputs);
  Eigen::Index wrong = 0;
  for (std::size_t i = 0; i < got.size(); ++i) wrong += got[i] != labels[i];
  return 100.0 * static_cast<double>(wrong) /
         static_cast<double>(labels.size());
}

}  // namespace spinlab
