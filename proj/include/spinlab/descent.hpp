// Projected gradient descent on the sphere |sigma|^2 = n.
//
// One step is sigma <- retract(sigma - eta * P_sigma grad E(sigma)), where
// P_sigma g = g - (g.sigma/n) sigma projects onto the tangent plane and
// retract rescales back to radius sqrt(n). Convergence is declared on the
// PROJECTED gradient norm: the ambient gradient keeps a radial component
// that cannot vanish on the sphere, so a tolerance on it would never be met.
// The ambient norm is still recorded for comparison.
//
// descend() runs one trajectory. descend_batch() runs many in lock step,
// evaluating all active gradients per iteration as one matrix product
// against the symmetrized-tensor unfolding; converged columns retire from
// the batch. One tensor pass then serves hundreds of trials, which is what
// makes a 2000-trial census per regime tractable on a single core.
//
// critical_index() classifies a converged endpoint by the number of
// negative eigenvalues of the tangent-restricted second derivative
//   Q^T (hess E - (sigma . grad E / n) I) Q,
// with Q an orthonormal tangent basis from a Householder factorization of
// sigma. The radial correction term accounts for the constraint's curvature;
// at an exact critical point this is the standard sphere Hessian.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spinlab/hamiltonian.hpp"

namespace spinlab {

struct DescentConfig {
  double eta = 0.1;
  double grad_tol = 1e-4;
  std::uint64_t max_iters = 1000000;
};

struct DescentResult {
  SpinConfiguration endpoint;
  double final_energy = 0.0;
  double normalized_energy = 0.0;  // final_energy / n
  std::uint64_t iters = 0;
  double grad_norm = 0.0;          // projected, at the endpoint
  double ambient_grad_norm = 0.0;  // unprojected, for comparison
  bool converged = false;
};

// Uniform on the sphere of radius sqrt(n): normalized isotropic Gaussian.
SpinConfiguration random_configuration(Eigen::Index n, std::uint64_t seed);

// g - (g . sigma / n) sigma.
Eigen::VectorXd project_tangent(const Eigen::VectorXd& g,
                                const SpinConfiguration& sigma);

// sqrt(n) * v / |v|. Rejects v = 0.
SpinConfiguration retract(const Eigen::VectorXd& v);

DescentResult descend(const Disorder& d, const ExternalField& f,
                      const SpinConfiguration& sigma0,
                      const DescentConfig& cfg = {});

struct BatchDescentResult {
  Eigen::MatrixXd endpoints;  // n x trials, one column per trajectory
  Eigen::VectorXd final_energy;
  Eigen::VectorXd normalized_energy;
  Eigen::VectorXd grad_norm;
  Eigen::VectorXd ambient_grad_norm;
  std::vector<std::uint64_t> iters;
  std::vector<char> converged;
};

// Lock-step descent from every column of inits (n x trials). Each column
// follows exactly the descend() iteration; results are deterministic in the
// inputs and independent of how many columns share the batch up to gradient
// summation order inside the matrix product.
BatchDescentResult descend_batch(const Disorder& d, const ExternalField& f,
                                 const Eigen::MatrixXd& inits,
                                 const DescentConfig& cfg = {});

// Ambient gradients for every column of points (n x T), evaluated through
// the same batched contraction the lock-step descent uses.
Eigen::MatrixXd batch_gradients(const Disorder& d, const ExternalField& f,
                                const Eigen::MatrixXd& points);

// Number of eigenvalues of the tangent-restricted second derivative below
// -eig_tol, with eig_tol = 1e-6 times the restricted matrix's largest
// absolute entry. Local minima return 0. Throws std::invalid_argument when
// the projected gradient norm at sigma exceeds 10 * grad_tol.
int critical_index(const Disorder& d, const ExternalField& f,
                   const SpinConfiguration& sigma, double grad_tol = 1e-4);

// critical_index for a precomputed ambient Hessian; shared by the batched
// census path so both routes count eigenvalues identically.
int critical_index_with_hessian(const Eigen::MatrixXd& ambient_hessian,
                                const Eigen::VectorXd& ambient_gradient,
                                const SpinConfiguration& sigma);

}  // namespace spinlab
